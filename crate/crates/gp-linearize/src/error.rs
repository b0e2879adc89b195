use gp_core::GpError;
use thiserror::Error;

/// Failures while building extended states or local models.
#[derive(Debug, Error)]
pub enum LinearizeError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("covariance has eigenvalue {eigenvalue} below the PSD tolerance")]
    InvalidCovariance { eigenvalue: f64 },
    #[error("linearization failed at {coordinate}: {message}")]
    LinearizationFailed { coordinate: String, message: String },
    #[error(transparent)]
    Gp(#[from] GpError),
}
