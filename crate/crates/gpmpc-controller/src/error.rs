use gp_core::GpError;
use gp_linearize::LinearizeError;
use qp_activeset::QpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MpcError {
    #[error("invalid controller configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("constraint tightening infeasible in coordinates {coordinates:?}")]
    InfeasibleTightening { coordinates: Vec<usize> },

    #[error("condensed cost is not strictly convex; check the Q/R weights")]
    NotStrictlyConvex,

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Linearize(#[from] LinearizeError),

    #[error(transparent)]
    Qp(#[from] QpError),

    #[error(transparent)]
    Gp(#[from] GpError),
}
