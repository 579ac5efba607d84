//! Recommendation policies as stacks of doubly stochastic matrices.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::instance::{matrix_from_rows, matrix_to_rows};
use crate::{Error, Instance, Result};

/// Row/column sums must be within this distance of 1.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;
/// Entries below `-NEGATIVE_TOLERANCE` are rejected.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// `a[i][(j, k)]` is the probability that right agent `j` sits at position
/// `k` in left agent `i`'s list; `b[j][(i, l)]` is the mirror for right agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
}

impl Policy {
    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// Entrywise `(1 - w) * self + w * other`, on both sides.
    pub fn convex_combination(&self, other: &Policy, w: f64) -> Policy {
        let mix = |x: &[DMatrix<f64>], y: &[DMatrix<f64>]| {
            x.iter()
                .zip(y)
                .map(|(p, q)| p * (1.0 - w) + q * w)
                .collect()
        };
        Policy {
            a: mix(&self.a, &other.a),
            b: mix(&self.b, &other.b),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PolicyFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: PolicyFile = serde_json::from_str(s)?;
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

/// Every agent's list is uniform over positions.
pub fn uniform_policy(n: usize, m: usize) -> Policy {
    Policy {
        a: vec![DMatrix::from_element(m, m, 1.0 / m as f64); n],
        b: vec![DMatrix::from_element(n, n, 1.0 / n as f64); m],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

/// One failed doubly-stochastic check.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Dimension { matrix: String, expected: String, got: String },
    Sum { matrix: String, axis: Axis, index: usize, sum: f64 },
    Negative { matrix: String, row: usize, col: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension { matrix, expected, got } => {
                write!(f, "{matrix}: expected {expected}, got {got}")
            }
            Violation::Sum { matrix, axis, index, sum } => {
                let axis = match axis {
                    Axis::Row => "row",
                    Axis::Column => "column",
                };
                write!(f, "{matrix}: {axis} {index} sums to {sum}")
            }
            Violation::Negative { matrix, row, col, value } => {
                write!(f, "{matrix}: entry ({row}, {col}) is negative ({value})")
            }
        }
    }
}

/// Checks that `pol` has the instance's shape and that every matrix is doubly
/// stochastic. Indices in violations are 0-based.
pub fn validate_policy(inst: &Instance, pol: &Policy) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let (n, m) = (inst.n(), inst.m());
    if pol.a.len() != n {
        out.push(Violation::Dimension {
            matrix: "A".into(),
            expected: format!("{n} matrices"),
            got: format!("{} matrices", pol.a.len()),
        });
    }
    if pol.b.len() != m {
        out.push(Violation::Dimension {
            matrix: "B".into(),
            expected: format!("{m} matrices"),
            got: format!("{} matrices", pol.b.len()),
        });
    }
    for (i, mat) in pol.a.iter().enumerate() {
        check_matrix(&format!("A[{i}]"), mat, m, &mut out);
    }
    for (j, mat) in pol.b.iter().enumerate() {
        check_matrix(&format!("B[{j}]"), mat, n, &mut out);
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn check_matrix(name: &str, mat: &DMatrix<f64>, d: usize, out: &mut Vec<Violation>) {
    if mat.shape() != (d, d) {
        out.push(Violation::Dimension {
            matrix: name.to_string(),
            expected: format!("{d}x{d}"),
            got: format!("{}x{}", mat.nrows(), mat.ncols()),
        });
        return;
    }
    for r in 0..d {
        for c in 0..d {
            let x = mat[(r, c)];
            if !(x >= -NEGATIVE_TOLERANCE) {
                out.push(Violation::Negative {
                    matrix: name.to_string(),
                    row: r,
                    col: c,
                    value: x,
                });
            }
        }
    }
    for r in 0..d {
        let sum: f64 = mat.row(r).iter().sum();
        if !((sum - 1.0).abs() <= STOCHASTIC_TOLERANCE) {
            out.push(Violation::Sum { matrix: name.to_string(), axis: Axis::Row, index: r, sum });
        }
    }
    for c in 0..d {
        let sum: f64 = mat.column(c).iter().sum();
        if !((sum - 1.0).abs() <= STOCHASTIC_TOLERANCE) {
            out.push(Violation::Sum { matrix: name.to_string(), axis: Axis::Column, index: c, sum });
        }
    }
}

/// Like [`validate_policy`] but folds violations into an [`Error`].
pub fn ensure_valid(inst: &Instance, pol: &Policy) -> Result<()> {
    validate_policy(inst, pol).map_err(|v| {
        let msg: Vec<String> = v.iter().take(5).map(ToString::to_string).collect();
        let more = if v.len() > 5 { format!(" (+{} more)", v.len() - 5) } else { String::new() };
        Error::InvalidPolicy(msg.join("; ") + &more)
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "PascalCase")]
pub struct PolicyFile {
    pub a: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<Vec<f64>>>,
}

impl From<&Policy> for PolicyFile {
    fn from(p: &Policy) -> Self {
        Self {
            a: p.a.iter().map(matrix_to_rows).collect(),
            b: p.b.iter().map(matrix_to_rows).collect(),
        }
    }
}

impl TryFrom<PolicyFile> for Policy {
    type Error = Error;

    fn try_from(f: PolicyFile) -> Result<Self> {
        Ok(Policy {
            a: f.a.iter().map(|m| matrix_from_rows(m)).collect::<Result<_>>()?,
            b: f.b.iter().map(|m| matrix_from_rows(m)).collect::<Result<_>>()?,
        })
    }
}
