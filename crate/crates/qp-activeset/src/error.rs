use thiserror::Error;

/// Failures while building or serializing QP problems.
#[derive(Debug, Error)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("quadratic term is not symmetric (max asymmetry {0})")]
    NotSymmetric(f64),
    #[error("quadratic term is not positive definite")]
    NotPositiveDefinite,
    #[error("entries must be finite")]
    NonFinite,
    #[error("working set index {index} out of range {total}")]
    BadIndex { index: usize, total: usize },
    #[error("malformed problem dump: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
