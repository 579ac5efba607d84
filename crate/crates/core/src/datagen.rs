//! Synthetic markets mixing global popularity with idiosyncratic taste.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, ExamKind, ExaminationFunction, Instance, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub exam: ExamKind,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.m < 2 {
            return Err(Error::InvalidConfig(format!(
                "synthetic markets need n, m >= 2 (got n={}, m={})",
                self.n, self.m
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }
}

/// `p1(i, j) = lambda * j/(m-1) + (1 - lambda) * U` and
/// `p2(j, i) = lambda * i/(n-1) + (1 - lambda) * U` with 0-based indices and
/// iid `U ~ Uniform[0, 1)`.
///
/// Draws come from ChaCha8 seeded with `seed`, consumed row-major, all of
/// `p1` before `p2`.
pub fn synth_instance(spec: &SynthSpec) -> Result<Instance> {
    spec.validate()?;
    let (n, m, lambda) = (spec.n, spec.m, spec.lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = |rows: usize, cols: usize, pop_den: f64| {
        let mut out = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let u: f64 = rng.random();
                let pop = c as f64 / pop_den;
                out[(r, c)] = (lambda * pop + (1.0 - lambda) * u).clamp(0.0, 1.0);
            }
        }
        out
    };
    let p1 = draw(n, m, (m - 1) as f64);
    let p2 = draw(m, n, (n - 1) as f64);
    Instance::new(p1, p2, ExaminationFunction::new(spec.exam, None))
}
