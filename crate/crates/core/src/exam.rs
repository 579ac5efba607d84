//! Position-based examination probabilities.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExamKind {
    /// `v(k) = 1/k`
    #[serde(rename = "inv")]
    Inverse,
    /// `v(k) = 1/log2(k+1)`
    #[serde(rename = "log")]
    Logarithmic,
}

impl ExamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExamKind::Inverse => "inv",
            ExamKind::Logarithmic => "log",
        }
    }
}

impl std::str::FromStr for ExamKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "inv" | "inverse" => Ok(ExamKind::Inverse),
            "log" | "logarithmic" => Ok(ExamKind::Logarithmic),
            other => Err(crate::Error::Parse(format!("unknown examination kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ExamKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Examination function `v(k)` with an optional truncation threshold.
///
/// Positions are 1-based. With `cutoff = Some(K)`, every position past `K`
/// has examination probability zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExaminationFunction {
    pub kind: ExamKind,
    #[serde(rename = "K")]
    pub cutoff: Option<usize>,
}

impl ExaminationFunction {
    pub fn new(kind: ExamKind, cutoff: Option<usize>) -> Self {
        Self { kind, cutoff }
    }

    pub fn inverse() -> Self {
        Self::new(ExamKind::Inverse, None)
    }

    pub fn logarithmic() -> Self {
        Self::new(ExamKind::Logarithmic, None)
    }

    /// `v(k)` for a 1-based position `k`.
    pub fn value(&self, k: usize) -> f64 {
        assert!(k >= 1, "positions are 1-based");
        if let Some(cut) = self.cutoff {
            if k > cut {
                return 0.0;
            }
        }
        match self.kind {
            ExamKind::Inverse => 1.0 / k as f64,
            ExamKind::Logarithmic => 1.0 / ((k + 1) as f64).log2(),
        }
    }

    /// `[v(1), ..., v(len)]`.
    pub fn weights(&self, len: usize) -> Vec<f64> {
        (1..=len).map(|k| self.value(k)).collect()
    }
}

/// Free-function form of [`ExaminationFunction::value`].
pub fn examination_value(exam: &ExaminationFunction, k: usize) -> f64 {
    exam.value(k)
}
