//! Market instances: side sizes, directed preference probabilities and the
//! examination function.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, ExaminationFunction, Result};

/// A two-sided market.
///
/// `p1(i, j)` is left agent `i`'s preference probability for right agent `j`;
/// `p2(j, i)` is the reverse direction. The joint probability
/// `p(i, j) = p1(i, j) * p2(j, i)` is derived once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    p1: DMatrix<f64>,
    p2: DMatrix<f64>,
    joint: DMatrix<f64>,
    exam: ExaminationFunction,
}

impl Instance {
    pub fn new(p1: DMatrix<f64>, p2: DMatrix<f64>, exam: ExaminationFunction) -> Result<Self> {
        let (n, m) = p1.shape();
        if n == 0 || m == 0 {
            return Err(Error::InvalidInstance("both sides need at least one agent".into()));
        }
        if p2.shape() != (m, n) {
            return Err(Error::ShapeMismatch {
                expected: format!("p2 {m}x{n}"),
                got: format!("p2 {}x{}", p2.nrows(), p2.ncols()),
            });
        }
        for (name, mat) in [("p1", &p1), ("p2", &p2)] {
            if let Some(x) = mat.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::InvalidInstance(format!(
                    "{name} entry {x} outside [0, 1]"
                )));
            }
        }
        if exam.cutoff == Some(0) {
            return Err(Error::InvalidInstance("truncation K must be positive".into()));
        }
        let joint = DMatrix::from_fn(n, m, |i, j| p1[(i, j)] * p2[(j, i)]);
        Ok(Self { p1, p2, joint, exam })
    }

    /// Builds an instance from nested rows (`p1` is n rows of m, `p2` is m rows of n).
    pub fn from_rows(
        p1: &[Vec<f64>],
        p2: &[Vec<f64>],
        exam: ExaminationFunction,
    ) -> Result<Self> {
        Self::new(matrix_from_rows(p1)?, matrix_from_rows(p2)?, exam)
    }

    pub fn n(&self) -> usize {
        self.p1.nrows()
    }

    pub fn m(&self) -> usize {
        self.p1.ncols()
    }

    pub fn p1(&self) -> &DMatrix<f64> {
        &self.p1
    }

    pub fn p2(&self) -> &DMatrix<f64> {
        &self.p2
    }

    /// Joint preference `p(i, j)`, n x m.
    pub fn joint(&self) -> &DMatrix<f64> {
        &self.joint
    }

    pub fn exam(&self) -> &ExaminationFunction {
        &self.exam
    }

    pub fn with_exam(&self, exam: ExaminationFunction) -> Self {
        Self {
            exam,
            ..self.clone()
        }
    }

    /// Examination weights for positions in a left agent's list (length m).
    pub fn left_list_weights(&self) -> Vec<f64> {
        self.exam.weights(self.m())
    }

    /// Examination weights for positions in a right agent's list (length n).
    pub fn right_list_weights(&self) -> Vec<f64> {
        self.exam.weights(self.n())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&InstanceFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(s)?;
        file.try_into()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

/// On-disk instance layout.
#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    pub p1: Vec<Vec<f64>>,
    pub p2: Vec<Vec<f64>>,
    pub exam: ExaminationFunction,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        Self {
            n: inst.n(),
            m: inst.m(),
            p1: matrix_to_rows(&inst.p1),
            p2: matrix_to_rows(&inst.p2),
            exam: inst.exam,
        }
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        let inst = Instance::from_rows(&file.p1, &file.p2, file.exam)?;
        if inst.n() != file.n || inst.m() != file.m {
            return Err(Error::ShapeMismatch {
                expected: format!("n={} m={}", file.n, file.m),
                got: format!("n={} m={}", inst.n(), inst.m()),
            });
        }
        Ok(inst)
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::ShapeMismatch {
            expected: format!("rows of length {ncols}"),
            got: format!("row of length {}", bad.len()),
        });
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(mat: &DMatrix<f64>) -> Vec<Vec<f64>> {
    mat.row_iter().map(|r| r.iter().copied().collect()).collect()
}
