//! Envy audits over opportunities and the preference-similarity diagnostic.

use serde::{Deserialize, Serialize};

use crate::welfare::{check_shape, cross_utility_matrix, Exposures};
use crate::{Error, Instance, Policy, Result, Side};

/// How one agent appears across the opposite side's lists: for left agent
/// `i`, row `j` is `B_j(i, .)`; for right agent `j`, row `i` is `A_i(j, .)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpportunityView {
    pub side: Side,
    pub agent: usize,
    pub rows: Vec<Vec<f64>>,
}

impl OpportunityView {
    pub fn of(pol: &Policy, side: Side, agent: usize) -> Result<Self> {
        let (mats, size) = match side {
            Side::Left => (&pol.b, pol.n()),
            Side::Right => (&pol.a, pol.m()),
        };
        if agent >= size {
            return Err(Error::IndexOutOfRange { side: side.as_str(), index: agent, size });
        }
        let rows = mats
            .iter()
            .map(|mat| mat.row(agent).iter().copied().collect())
            .collect();
        Ok(Self { side, agent, rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvyReport {
    pub left_envy_pairs: usize,
    pub right_envy_pairs: usize,
    pub max_left_envy: f64,
    pub max_right_envy: f64,
    pub tolerance: f64,
}

impl EnvyReport {
    pub fn is_envy_free(&self) -> bool {
        self.left_envy_pairs == 0 && self.right_envy_pairs == 0
    }
}

/// Counts ordered pairs `(x, y)` on each side where `x` would gain more than
/// `tolerance` by swapping in `y`'s opportunity.
pub fn envy_audit(inst: &Instance, pol: &Policy, tolerance: f64) -> Result<EnvyReport> {
    if !(tolerance >= 0.0) {
        return Err(Error::InvalidConfig(format!("envy tolerance must be >= 0, got {tolerance}")));
    }
    check_shape(inst, pol)?;
    let exp = Exposures::compute(inst, pol);
    let (left_envy_pairs, max_left_envy) =
        count_envy(&cross_utility_matrix(inst, &exp, Side::Left), tolerance);
    let (right_envy_pairs, max_right_envy) =
        count_envy(&cross_utility_matrix(inst, &exp, Side::Right), tolerance);
    Ok(EnvyReport { left_envy_pairs, right_envy_pairs, max_left_envy, max_right_envy, tolerance })
}

fn count_envy(cross: &nalgebra::DMatrix<f64>, tolerance: f64) -> (usize, f64) {
    let d = cross.nrows();
    let mut count = 0;
    let mut worst = 0.0f64;
    for x in 0..d {
        let own = cross[(x, x)];
        for y in 0..d {
            if x == y {
                continue;
            }
            let gap = cross[(x, y)] - own;
            if gap > tolerance {
                count += 1;
            }
            worst = worst.max(gap);
        }
    }
    (count, worst)
}

/// Result of the similarity diagnostic. Neighbour sets include the agent
/// itself, so `k` neighbours plus the agent form the required `k + 1` set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityDiagnostic {
    pub k: usize,
    pub epsilon: f64,
    pub left: Option<f64>,
    pub right: Option<f64>,
    pub includes_self: bool,
}

/// Smallest `epsilon` for which every agent has `k` same-side agents within
/// sup-norm distance `epsilon` of its joint preference profile.
pub fn epsilon_similarity(inst: &Instance, k: usize) -> Result<f64> {
    Ok(similarity_diagnostic(inst, k)?.epsilon)
}

/// Per-side breakdown of [`epsilon_similarity`]. A side with at most `k`
/// agents cannot satisfy the condition and is reported as `None`; it is an
/// error only when neither side is large enough.
pub fn similarity_diagnostic(inst: &Instance, k: usize) -> Result<SimilarityDiagnostic> {
    if k == 0 {
        return Err(Error::InvalidConfig("K must be positive".into()));
    }
    let p = inst.joint();
    let (n, m) = (inst.n(), inst.m());
    let left = (k < n).then(|| {
        let dist = |a: usize, b: usize| (0..m).map(|j| (p[(a, j)] - p[(b, j)]).abs()).fold(0.0, f64::max);
        kth_neighbour_radius(n, k, dist)
    });
    let right = (k < m).then(|| {
        let dist = |a: usize, b: usize| (0..n).map(|i| (p[(i, a)] - p[(i, b)]).abs()).fold(0.0, f64::max);
        kth_neighbour_radius(m, k, dist)
    });
    let epsilon = match (left, right) {
        (None, None) => {
            return Err(Error::SimilarityTooLarge { side: "either", needed: k + 1, size: n.max(m) })
        }
        (l, r) => l.unwrap_or(0.0).max(r.unwrap_or(0.0)),
    };
    Ok(SimilarityDiagnostic { k, epsilon, left, right, includes_self: true })
}

fn kth_neighbour_radius(size: usize, k: usize, dist: impl Fn(usize, usize) -> f64) -> f64 {
    (0..size)
        .map(|a| {
            let mut d: Vec<f64> = (0..size).filter(|&b| b != a).map(|b| dist(a, b)).collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .fold(0.0, f64::max)
}
