//! Preference estimation from interaction logs with implicit-feedback ALS.
//!
//! Each direction (left rates right, right rates left) is factorized on its
//! own. A pair with `c` positive signals has preference 1 and confidence
//! `1 + alpha * c`; every other pair, including negative-only pairs, has
//! preference 0 and confidence 1. Raw scores are min-max scaled into [0, 1].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, ExaminationFunction, Instance, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "lr")]
    LeftToRight,
    #[serde(rename = "rl")]
    RightToLeft,
}

impl Direction {
    fn as_str(self) -> &'static str {
        match self {
            Direction::LeftToRight => "lr",
            Direction::RightToLeft => "rl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    Pos,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub left_id: String,
    pub right_id: String,
    pub direction: Direction,
    pub signal: Signal,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionLog {
    pub rows: Vec<Interaction>,
}

impl InteractionLog {
    /// Reads `left_id,right_id,direction,signal` CSV.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<Interaction>, _>>()?;
        Ok(Self { rows })
    }

    pub fn push(&mut self, left: &str, right: &str, direction: Direction, signal: Signal) {
        self.rows.push(Interaction {
            left_id: left.to_string(),
            right_id: right.to_string(),
            direction,
            signal,
        });
    }

    /// Sorted distinct left and right ids.
    pub fn vocabularies(&self) -> (Vec<String>, Vec<String>) {
        let left: BTreeSet<&str> = self.rows.iter().map(|r| r.left_id.as_str()).collect();
        let right: BTreeSet<&str> = self.rows.iter().map(|r| r.right_id.as_str()).collect();
        (
            left.into_iter().map(String::from).collect(),
            right.into_iter().map(String::from).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlsConfig {
    pub factors: usize,
    pub regularization: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self { factors: 32, regularization: 0.1, alpha: 40.0, iterations: 15, seed: 0 }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factors == 0 {
            return Err(Error::InvalidConfig("factors must be >= 1".into()));
        }
        if !(self.regularization > 0.0) {
            return Err(Error::InvalidConfig("regularization must be > 0".into()));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidConfig("alpha must be >= 0".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Fitted factors for one direction: `users` rows against `items` rows.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub users: DMatrix<f64>,
    pub items: DMatrix<f64>,
    /// Regularized weighted squared error after initialization and after
    /// every full sweep.
    pub objective_history: Vec<f64>,
}

impl Factorization {
    pub fn scores(&self) -> DMatrix<f64> {
        &self.users * self.items.transpose()
    }
}

fn confidence(counts: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    counts.map(|c| 1.0 + alpha * c)
}

fn preference(counts: &DMatrix<f64>) -> DMatrix<f64> {
    counts.map(|c| if c > 0.0 { 1.0 } else { 0.0 })
}

fn objective(conf: &DMatrix<f64>, pref: &DMatrix<f64>, x: &DMatrix<f64>, y: &DMatrix<f64>, reg: f64) -> f64 {
    let pred = x * y.transpose();
    let fit: f64 = conf
        .iter()
        .zip(pref.iter())
        .zip(pred.iter())
        .map(|((c, p), s)| c * (p - s) * (p - s))
        .sum();
    fit + reg * (x.norm_squared() + y.norm_squared())
}

/// Solves every row of `target` against fixed `other` factors:
/// `x_u = (Y^T C_u Y + reg I)^-1 Y^T C_u p_u`.
fn solve_rows(
    conf: &DMatrix<f64>,
    pref: &DMatrix<f64>,
    other: &DMatrix<f64>,
    target: &mut DMatrix<f64>,
    reg: f64,
) {
    let k = other.ncols();
    for u in 0..conf.nrows() {
        let mut lhs = DMatrix::<f64>::identity(k, k) * reg;
        let mut rhs = DVector::<f64>::zeros(k);
        for i in 0..conf.ncols() {
            let c = conf[(u, i)];
            let y = other.row(i).transpose();
            lhs.syger(c, &y, &y, 1.0);
            if pref[(u, i)] > 0.0 {
                rhs.axpy(c * pref[(u, i)], &y, 1.0);
            }
        }
        let sol = lhs
            .cholesky()
            .expect("regularized normal matrix is positive definite")
            .solve(&rhs);
        target.set_row(u, &sol.transpose());
    }
}

/// Weighted ALS on a positive-count matrix.
pub fn fit_factors(counts: &DMatrix<f64>, cfg: &AlsConfig, rng: &mut impl Rng) -> Result<Factorization> {
    cfg.validate()?;
    let (nu, ni) = counts.shape();
    let k = cfg.factors;
    let conf = confidence(counts, cfg.alpha);
    let pref = preference(counts);
    let mut users = DMatrix::from_fn(nu, k, |_, _| rng.random::<f64>() * 0.1);
    let mut items = DMatrix::from_fn(ni, k, |_, _| rng.random::<f64>() * 0.1);
    let mut history = vec![objective(&conf, &pref, &users, &items, cfg.regularization)];
    let conf_t = conf.transpose();
    let pref_t = pref.transpose();
    for _ in 0..cfg.iterations {
        solve_rows(&conf, &pref, &items, &mut users, cfg.regularization);
        solve_rows(&conf_t, &pref_t, &users, &mut items, cfg.regularization);
        history.push(objective(&conf, &pref, &users, &items, cfg.regularization));
    }
    Ok(Factorization { users, items, objective_history: history })
}

/// `(x - min) / (max - min)`; a constant matrix maps to 0.5 everywhere.
pub fn normalize_scores(raw: &DMatrix<f64>) -> DMatrix<f64> {
    let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return raw.map(|_| 0.5);
    }
    raw.map(|x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0))
}

/// Estimated preference probabilities with the id order used for rows and
/// columns.
#[derive(Debug, Clone)]
pub struct Preferences {
    pub left_ids: Vec<String>,
    pub right_ids: Vec<String>,
    /// n x m
    pub p1: DMatrix<f64>,
    /// m x n
    pub p2: DMatrix<f64>,
}

impl Preferences {
    pub fn to_instance(&self, exam: ExaminationFunction) -> Result<Instance> {
        Instance::new(self.p1.clone(), self.p2.clone(), exam)
    }
}

/// Fits both directions and scales each score matrix into [0, 1].
pub fn fit_preferences(log: &InteractionLog, cfg: &AlsConfig) -> Result<Preferences> {
    cfg.validate()?;
    let (left_ids, right_ids) = log.vocabularies();
    let left_index: BTreeMap<&str, usize> =
        left_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let right_index: BTreeMap<&str, usize> =
        right_ids.iter().enumerate().map(|(j, s)| (s.as_str(), j)).collect();
    let (n, m) = (left_ids.len(), right_ids.len());
    let mut lr = DMatrix::zeros(n, m);
    let mut rl = DMatrix::zeros(m, n);
    for row in &log.rows {
        if row.signal != Signal::Pos {
            continue;
        }
        let i = left_index[row.left_id.as_str()];
        let j = right_index[row.right_id.as_str()];
        match row.direction {
            Direction::LeftToRight => lr[(i, j)] += 1.0,
            Direction::RightToLeft => rl[(j, i)] += 1.0,
        }
    }
    for (dir, counts) in [(Direction::LeftToRight, &lr), (Direction::RightToLeft, &rl)] {
        if counts.iter().all(|&c| c == 0.0) {
            return Err(Error::InsufficientInteractions(dir.as_str()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let p1 = normalize_scores(&fit_factors(&lr, cfg, &mut rng)?.scores());
    let p2 = normalize_scores(&fit_factors(&rl, cfg, &mut rng)?.scores());
    Ok(Preferences { left_ids, right_ids, p1, p2 })
}
