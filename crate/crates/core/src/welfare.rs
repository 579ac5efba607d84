//! Match probabilities, utilities and welfare under the position-based model.
//!
//! Every quantity factors through the expected examination ("exposure") of a
//! pair in each direction:
//! `eA(i, j) = sum_k v(k) A_i(j, k)` and `eB(j, i) = sum_l v(l) B_j(i, l)`,
//! so that `Pr[i matches j] = p(i, j) * eA(i, j) * eB(j, i)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Instance, Policy, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Expected examination of every pair, in both directions.
#[derive(Debug, Clone)]
pub struct Exposures {
    /// n x m; how strongly left agent `i` examines right agent `j`.
    pub left: DMatrix<f64>,
    /// m x n; how strongly right agent `j` examines left agent `i`.
    pub right: DMatrix<f64>,
}

impl Exposures {
    pub fn new(inst: &Instance, pol: &Policy) -> Result<Self> {
        check_shape(inst, pol)?;
        Ok(Self::compute(inst, pol))
    }

    pub(crate) fn compute(inst: &Instance, pol: &Policy) -> Self {
        let (n, m) = (inst.n(), inst.m());
        let va = inst.left_list_weights();
        let vb = inst.right_list_weights();
        let left = DMatrix::from_fn(n, m, |i, j| dot_row(&pol.a[i], j, &va));
        let right = DMatrix::from_fn(m, n, |j, i| dot_row(&pol.b[j], i, &vb));
        Self { left, right }
    }
}

fn dot_row(mat: &DMatrix<f64>, row: usize, weights: &[f64]) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(k, v)| v * mat[(row, k)])
        .sum()
}

pub(crate) fn check_shape(inst: &Instance, pol: &Policy) -> Result<()> {
    let (n, m) = (inst.n(), inst.m());
    let ok = pol.a.len() == n
        && pol.b.len() == m
        && pol.a.iter().all(|x| x.shape() == (m, m))
        && pol.b.iter().all(|x| x.shape() == (n, n));
    if ok {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            expected: format!("{n} matrices {m}x{m} and {m} matrices {n}x{n}"),
            got: format!("{} A matrices and {} B matrices", pol.a.len(), pol.b.len()),
        })
    }
}

fn check_index(side: Side, index: usize, size: usize) -> Result<()> {
    if index < size {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { side: side.as_str(), index, size })
    }
}

/// Probability that left agent `i` and right agent `j` match (0-based indices).
pub fn match_probability(inst: &Instance, pol: &Policy, i: usize, j: usize) -> Result<f64> {
    check_shape(inst, pol)?;
    check_index(Side::Left, i, inst.n())?;
    check_index(Side::Right, j, inst.m())?;
    let ea = dot_row(&pol.a[i], j, &inst.left_list_weights());
    let eb = dot_row(&pol.b[j], i, &inst.right_list_weights());
    Ok(inst.joint()[(i, j)] * ea * eb)
}

/// Expected matches of every left agent (`U_i`) and every right agent (`V_j`).
pub fn utilities(inst: &Instance, exp: &Exposures) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = (inst.n(), inst.m());
    let p = inst.joint();
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; m];
    for i in 0..n {
        for j in 0..m {
            let pr = p[(i, j)] * exp.left[(i, j)] * exp.right[(j, i)];
            left[i] += pr;
        }
    }
    for j in 0..m {
        for i in 0..n {
            right[j] += p[(i, j)] * exp.left[(i, j)] * exp.right[(j, i)];
        }
    }
    (left, right)
}

/// Expected number of matches of one agent.
pub fn utility(inst: &Instance, pol: &Policy, side: Side, agent: usize) -> Result<f64> {
    check_shape(inst, pol)?;
    let size = match side {
        Side::Left => inst.n(),
        Side::Right => inst.m(),
    };
    check_index(side, agent, size)?;
    let exp = Exposures::compute(inst, pol);
    let p = inst.joint();
    Ok(match side {
        Side::Left => (0..inst.m())
            .map(|j| p[(agent, j)] * exp.left[(agent, j)] * exp.right[(j, agent)])
            .sum(),
        Side::Right => (0..inst.n())
            .map(|i| p[(i, agent)] * exp.left[(i, agent)] * exp.right[(agent, i)])
            .sum(),
    })
}

/// Social welfare: the expected total number of matches.
pub fn social_welfare(inst: &Instance, pol: &Policy) -> Result<f64> {
    let exp = Exposures::new(inst, pol)?;
    Ok(utilities(inst, &exp).0.iter().sum())
}

/// Agents whose joint preference row is identically zero; their utility is
/// zero under every policy so they are left out of NSW products.
pub fn nsw_included(inst: &Instance, side: Side) -> Vec<bool> {
    let p = inst.joint();
    match side {
        Side::Left => (0..inst.n()).map(|i| p.row(i).iter().any(|&x| x > 0.0)).collect(),
        Side::Right => (0..inst.m()).map(|j| p.column(j).iter().any(|&x| x > 0.0)).collect(),
    }
}

pub(crate) fn log_nsw_from(utils: &[f64], included: &[bool]) -> f64 {
    utils
        .iter()
        .zip(included)
        .filter(|(_, inc)| **inc)
        .map(|(u, _)| u.ln())
        .sum()
}

/// Logarithm of one side's Nash social welfare. `-inf` when an included agent
/// has zero utility.
pub fn log_nsw(inst: &Instance, pol: &Policy, side: Side) -> Result<f64> {
    let exp = Exposures::new(inst, pol)?;
    let (left, right) = utilities(inst, &exp);
    let utils = match side {
        Side::Left => left,
        Side::Right => right,
    };
    Ok(log_nsw_from(&utils, &nsw_included(inst, side)))
}

/// All cross-utilities of one side: entry `(x, y)` is what `x` would get with
/// `y`'s opportunity while keeping its own recommendation list. The diagonal
/// holds the own utilities.
pub fn cross_utility_matrix(inst: &Instance, exp: &Exposures, side: Side) -> DMatrix<f64> {
    let (n, m) = (inst.n(), inst.m());
    let p = inst.joint();
    match side {
        Side::Left => DMatrix::from_fn(n, n, |i, t| {
            (0..m).map(|j| p[(i, j)] * exp.left[(i, j)] * exp.right[(j, t)]).sum()
        }),
        Side::Right => DMatrix::from_fn(m, m, |j, t| {
            (0..n).map(|i| p[(i, j)] * exp.left[(i, t)] * exp.right[(j, i)]).sum()
        }),
    }
}

/// Utility of `evaluator` when it receives `target`'s opportunity.
pub fn cross_utility(
    inst: &Instance,
    pol: &Policy,
    side: Side,
    evaluator: usize,
    target: usize,
) -> Result<f64> {
    check_shape(inst, pol)?;
    let size = match side {
        Side::Left => inst.n(),
        Side::Right => inst.m(),
    };
    check_index(side, evaluator, size)?;
    check_index(side, target, size)?;
    let exp = Exposures::compute(inst, pol);
    let p = inst.joint();
    Ok(match side {
        Side::Left => (0..inst.m())
            .map(|j| p[(evaluator, j)] * exp.left[(evaluator, j)] * exp.right[(j, target)])
            .sum(),
        Side::Right => (0..inst.n())
            .map(|i| p[(i, evaluator)] * exp.left[(i, target)] * exp.right[(evaluator, i)])
            .sum(),
    })
}
