use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{side} index {index} out of range (size {size})")]
    IndexOutOfRange {
        side: &'static str,
        index: usize,
        size: usize,
    },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("non-finite weight {value} at ({row}, {col})")]
    NonFiniteWeight { row: usize, col: usize, value: f64 },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("K+1 = {needed} exceeds {side} side size {size}")]
    SimilarityTooLarge {
        side: &'static str,
        needed: usize,
        size: usize,
    },

    #[error("insufficient interactions: no positive signals in direction {0}")]
    InsufficientInteractions(&'static str),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
