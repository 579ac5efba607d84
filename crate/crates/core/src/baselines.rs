//! Deterministic comparison policies: preference sorting (Naive), reciprocal
//! product sorting (Prod) and iterated maximum-weight matching (IterLP).

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::assignment::max_weight_matching;
use crate::{Instance, Policy, Result};

/// A deterministic list: `order[k]` is the agent shown at position `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingList {
    pub order: Vec<usize>,
}

impl RankingList {
    /// Sorts `0..scores.len()` by descending score, ties by ascending index.
    pub fn by_descending_score(scores: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self { order }
    }

    /// Entry `(agent, position)` is 1 for each listed agent.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let d = self.order.len();
        let mut out = DMatrix::zeros(d, d);
        for (k, &agent) in self.order.iter().enumerate() {
            out[(agent, k)] = 1.0;
        }
        out
    }
}

fn sorted_policy(
    inst: &Instance,
    left_score: impl Fn(usize, usize) -> f64,
    right_score: impl Fn(usize, usize) -> f64,
) -> Policy {
    let (n, m) = (inst.n(), inst.m());
    Policy {
        a: (0..n)
            .map(|i| {
                let s: Vec<f64> = (0..m).map(|j| left_score(i, j)).collect();
                RankingList::by_descending_score(&s).to_matrix()
            })
            .collect(),
        b: (0..m)
            .map(|j| {
                let s: Vec<f64> = (0..n).map(|i| right_score(j, i)).collect();
                RankingList::by_descending_score(&s).to_matrix()
            })
            .collect(),
    }
}

/// Each agent sees the other side sorted by its own preference.
pub fn naive_policy(inst: &Instance) -> Policy {
    let (p1, p2) = (inst.p1(), inst.p2());
    sorted_policy(inst, |i, j| p1[(i, j)], |j, i| p2[(j, i)])
}

/// Both sides sorted by the joint probability `p1(i, j) * p2(j, i)`.
pub fn prod_policy(inst: &Instance) -> Policy {
    let p = inst.joint();
    sorted_policy(inst, |i, j| p[(i, j)], |j, i| p[(i, j)])
}

/// Fills positions `1..=depth` from successive maximum-weight matchings on
/// the joint preferences, forbidding every pair once it has been placed.
///
/// An agent left unmatched in a round takes its best remaining partner
/// instead (ties by index). After `depth` rounds each partial list is
/// completed in ascending index order.
pub fn iter_lp_policy(inst: &Instance, depth: usize) -> Result<Policy> {
    let (n, m) = (inst.n(), inst.m());
    let p = inst.joint();
    // Placed partners, position by position.
    let mut left_lists: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut right_lists: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut forbidden = BTreeSet::new();

    for round in 0..depth {
        let matching = max_weight_matching(p, &forbidden)?;
        let mut picked = Vec::new();
        if round < m {
            for (i, list) in left_lists.iter_mut().enumerate() {
                let choice = matching.partner_of_left(i).or_else(|| {
                    best_remaining((0..m).filter(|&j| !forbidden.contains(&(i, j))), |j| p[(i, j)])
                });
                if let Some(j) = choice {
                    list.push(j);
                    picked.push((i, j));
                }
            }
        }
        if round < n {
            for (j, list) in right_lists.iter_mut().enumerate() {
                let choice = matching.partner_of_right(j).or_else(|| {
                    best_remaining((0..n).filter(|&i| !forbidden.contains(&(i, j))), |i| p[(i, j)])
                });
                if let Some(i) = choice {
                    list.push(i);
                    picked.push((i, j));
                }
            }
        }
        forbidden.extend(picked);
    }

    Ok(Policy {
        a: left_lists.iter().map(|l| complete(l, m)).collect(),
        b: right_lists.iter().map(|l| complete(l, n)).collect(),
    })
}

fn best_remaining(candidates: impl Iterator<Item = usize>, score: impl Fn(usize) -> f64) -> Option<usize> {
    candidates.fold(None, |best: Option<usize>, c| match best {
        Some(b) if score(b) >= score(c) => Some(b),
        _ => Some(c),
    })
}

/// Places `partial` in the first positions, then the unused agents in
/// ascending order. A partial list never repeats an agent because placed
/// pairs are forbidden.
fn complete(partial: &[usize], d: usize) -> DMatrix<f64> {
    let mut order = partial.to_vec();
    let placed: BTreeSet<usize> = partial.iter().copied().collect();
    order.extend((0..d).filter(|x| !placed.contains(x)));
    RankingList { order }.to_matrix()
}

/// IterLP depth used when none is given.
pub fn default_depth(inst: &Instance) -> usize {
    inst.n().min(inst.m())
}
