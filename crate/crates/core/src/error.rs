use thiserror::Error;

/// Errors raised by tensor construction, I/O and the solvers.
///
/// Per-run solver failures (non-convergence, divergence inside one slice or
/// restart) are reported as data in the solver outputs, not through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("matrix is not symmetric (asymmetry {asymmetry:e} exceeds {tolerance:e})")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
