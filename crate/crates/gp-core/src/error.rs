use thiserror::Error;

/// Errors produced while building, training, or evaluating GP models.
#[derive(Debug, Error)]
pub enum GpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dataset must contain at least one transition")]
    EmptyDataset,

    #[error("hyperparameters must be positive and finite: {0}")]
    InvalidHyperparameters(String),

    #[error("kernel matrix stayed non-positive-definite up to jitter {max_jitter:.3e}")]
    IllConditionedKernel { max_jitter: f64 },

    #[error("covariance has eigenvalue {eigenvalue:.3e} below the clamp tolerance")]
    IndefiniteCovariance { eigenvalue: f64 },

    #[error("numerically degenerate uncertain input: {0}")]
    DegenerateInput(String),

    #[error("predictive variance {value:.3e} is negative beyond tolerance")]
    NegativeVariance { value: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error("dataset file: {0}")]
    DatasetFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
