//! Alternating Frank-Wolfe over the two policy blocks.
//!
//! Each round linearizes the A-side objective at the current policy, moves
//! every `A_i` toward the best permutation matrix for its gradient block,
//! then does the same for B against the B-side objective. For social welfare
//! both objectives are SW; for Nash social welfare the A block maximizes the
//! right side's log-NSW and the B block the left side's.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::max_weight_permutation;
use crate::policy::ensure_valid;
use crate::welfare::{check_shape, log_nsw_from, nsw_included, utilities, Exposures};
use crate::{uniform_policy, Error, Instance, Policy, Result, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Expected number of matches.
    Sw,
    /// Log Nash social welfare of each side.
    Nsw,
}

/// Which policy block a gradient or step refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// `2 / (t + 2)` for 1-based round `t`.
    OpenLoop,
    Constant(f64),
}

impl StepSchedule {
    pub fn eta(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::OpenLoop => 2.0 / (t as f64 + 2.0),
            StepSchedule::Constant(eta) => eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    Uniform,
    /// Random mixture of permutation matrices drawn from `seed`.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub objective: Objective,
    pub max_iterations: usize,
    pub step: StepSchedule,
    /// Stop once both relative Frank-Wolfe gaps are at or below this.
    pub tolerance: f64,
    /// Denominator floor for NSW gradients.
    pub utility_floor: f64,
    pub inner_steps: usize,
    pub init: Initialization,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            objective: Objective::Sw,
            max_iterations: 100,
            step: StepSchedule::OpenLoop,
            tolerance: 1e-6,
            utility_floor: 1e-12,
            inner_steps: 1,
            init: Initialization::Uniform,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn new(objective: Objective) -> Self {
        Self { objective, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1".into());
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance must be > 0, got {}", self.tolerance));
        }
        if !(self.utility_floor > 0.0) {
            return bad(format!("utility_floor must be > 0, got {}", self.utility_floor));
        }
        if self.inner_steps == 0 {
            return bad("inner_steps must be >= 1".into());
        }
        if let StepSchedule::Constant(eta) = self.step {
            if !(eta > 0.0 && eta <= 1.0) {
                return bad(format!("constant step must lie in (0, 1], got {eta}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub iteration: usize,
    /// SW for the SW objective, `log NSW_1 + log NSW_2` for NSW; evaluated
    /// after the round.
    pub objective: f64,
    pub gap_a: f64,
    pub gap_b: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<RoundRecord>,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,gap_A,gap_B,eta\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{},{}", r.iteration, r.objective, r.gap_a, r.gap_b, r.eta);
        }
        out
    }
}

/// Policy plus the 0-based count of completed rounds.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub policy: Policy,
    pub t: usize,
}

/// Gradient of the block's objective (`F_2` for A, `F_1` for B) with respect
/// to that block, in the block's own shape.
pub fn gradient(
    inst: &Instance,
    pol: &Policy,
    objective: Objective,
    block: Block,
    utility_floor: f64,
) -> Result<Vec<DMatrix<f64>>> {
    check_shape(inst, pol)?;
    let exp = Exposures::compute(inst, pol);
    Ok(gradient_with(inst, &exp, objective, block, utility_floor))
}

fn gradient_with(
    inst: &Instance,
    exp: &Exposures,
    objective: Objective,
    block: Block,
    floor: f64,
) -> Vec<DMatrix<f64>> {
    let (n, m) = (inst.n(), inst.m());
    let p = inst.joint();
    let (left_u, right_u) = match objective {
        Objective::Sw => (vec![1.0; n], vec![1.0; m]),
        Objective::Nsw => {
            let (u, v) = utilities(inst, exp);
            (
                u.into_iter().map(|x| x.max(floor)).collect(),
                v.into_iter().map(|x| x.max(floor)).collect(),
            )
        }
    };
    match block {
        Block::A => {
            let va = inst.left_list_weights();
            (0..n)
                .map(|i| {
                    DMatrix::from_fn(m, m, |j, k| p[(i, j)] * va[k] * exp.right[(j, i)] / right_u[j])
                })
                .collect()
        }
        Block::B => {
            let vb = inst.right_list_weights();
            (0..m)
                .map(|j| {
                    DMatrix::from_fn(n, n, |i, l| p[(i, j)] * vb[l] * exp.left[(i, j)] / left_u[i])
                })
                .collect()
        }
    }
}

/// Value of the block objective and the combined trace objective.
fn objective_values(inst: &Instance, pol: &Policy, objective: Objective) -> (f64, f64, f64) {
    let exp = Exposures::compute(inst, pol);
    let (u, v) = utilities(inst, &exp);
    match objective {
        Objective::Sw => {
            let sw: f64 = u.iter().sum();
            (sw, sw, sw)
        }
        Objective::Nsw => {
            let f1 = log_nsw_from(&u, &nsw_included(inst, Side::Left));
            let f2 = log_nsw_from(&v, &nsw_included(inst, Side::Right));
            // (A-side, B-side, combined)
            (f2, f1, f1 + f2)
        }
    }
}

const STATIONARY_TOLERANCE: f64 = 1e-12;

/// One Frank-Wolfe step on a block; returns the gap at the pre-step point.
fn step_block(
    inst: &Instance,
    pol: &mut Policy,
    config: &SolverConfig,
    block: Block,
    eta: f64,
) -> Result<f64> {
    let exp = Exposures::compute(inst, pol);
    let grads = gradient_with(inst, &exp, config.objective, block, config.utility_floor);
    let vertices = grads
        .par_iter()
        .map(|g| max_weight_permutation(g).map(|p| p.to_matrix()))
        .collect::<Result<Vec<_>>>()?;
    let current = match block {
        Block::A => &mut pol.a,
        Block::B => &mut pol.b,
    };
    let mut gap = 0.0;
    for ((g, x), cur) in grads.iter().zip(&vertices).zip(current.iter_mut()) {
        let best = g.dot(x);
        let agent_gap = best - g.dot(cur);
        gap += agent_gap;
        // The current matrix already attains the linear maximum.
        if agent_gap <= STATIONARY_TOLERANCE * (1.0 + best.abs()) {
            continue;
        }
        *cur = &*cur * (1.0 - eta) + x * eta;
    }
    Ok(gap)
}

/// One outer round: A block then B block.
pub fn fw_round(inst: &Instance, state: &mut SolverState, config: &SolverConfig) -> Result<RoundRecord> {
    let t = state.t + 1;
    let eta = config.step.eta(t);
    let mut gap_a = 0.0;
    for s in 0..config.inner_steps {
        let g = step_block(inst, &mut state.policy, config, Block::A, eta)?;
        if s == 0 {
            gap_a = g;
        }
    }
    let mut gap_b = 0.0;
    for s in 0..config.inner_steps {
        let g = step_block(inst, &mut state.policy, config, Block::B, eta)?;
        if s == 0 {
            gap_b = g;
        }
    }
    state.t = t;
    let (_, _, objective) = objective_values(inst, &state.policy, config.objective);
    Ok(RoundRecord { iteration: t, objective, gap_a, gap_b, eta })
}

fn relative(gap: f64, value: f64) -> f64 {
    gap / value.abs().max(1.0)
}

pub fn initial_policy(inst: &Instance, config: &SolverConfig) -> Policy {
    match config.init {
        Initialization::Uniform => uniform_policy(inst.n(), inst.m()),
        Initialization::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut mixture = |d: usize| {
                // A strictly positive mixture keeps NSW utilities positive.
                let uniform = DMatrix::from_element(d, d, 1.0 / d as f64);
                let mut idx: Vec<usize> = (0..d).collect();
                for i in (1..d).rev() {
                    idx.swap(i, rng.random_range(0..=i));
                }
                let perm = DMatrix::from_fn(d, d, |r, c| if idx[r] == c { 1.0 } else { 0.0 });
                let w: f64 = rng.random_range(0.0..0.9);
                uniform * (1.0 - w) + perm * w
            };
            Policy {
                a: (0..inst.n()).map(|_| mixture(inst.m())).collect(),
                b: (0..inst.m()).map(|_| mixture(inst.n())).collect(),
            }
        }
    }
}

/// Runs rounds until both relative gaps fall to the tolerance or the
/// iteration budget is spent.
pub fn solve(inst: &Instance, config: &SolverConfig) -> Result<(Policy, SolveTrace)> {
    config.validate()?;
    let mut state = SolverState { policy: initial_policy(inst, config), t: 0 };
    let mut trace = SolveTrace::default();
    for _ in 0..config.max_iterations {
        let (fa, fb, _) = objective_values(inst, &state.policy, config.objective);
        let rec = fw_round(inst, &mut state, config)?;
        let done = relative(rec.gap_a, fa).max(relative(rec.gap_b, fb)) <= config.tolerance;
        trace.records.push(rec);
        if done {
            trace.converged = true;
            break;
        }
    }
    trace.iterations = state.t;
    ensure_valid(inst, &state.policy)?;
    Ok((state.policy, trace))
}
