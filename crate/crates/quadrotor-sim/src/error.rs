//! Error type shared by the plant model.

use thiserror::Error;

/// Everything that can go wrong while configuring or stepping the plant.
#[derive(Debug, Error)]
pub enum SimError {
    /// Physical parameters failed validation (non-positive mass, negative
    /// noise levels, and so on).
    #[error("invalid plant parameters: {0}")]
    InvalidParams(String),

    /// A state vector contained non-finite entries or had the wrong length.
    #[error("invalid plant state: {0}")]
    InvalidState(String),

    /// The requested intermediate controls do not correspond to any attitude
    /// with the fixed zero yaw setpoint.
    #[error("no reachable attitude for intermediate controls ux={ux}, uy={uy}")]
    UnreachableAttitude {
        /// Commanded projection of the thrust axis onto the world x axis.
        ux: f64,
        /// Commanded projection of the thrust axis onto the world y axis.
        uy: f64,
    },

    /// Integration produced a non-finite state, usually because the step size
    /// or the inputs were far outside the model's sane operating range.
    #[error("integration diverged: {0}")]
    Blowup(String),

    /// A step size or substep count that cannot be integrated.
    #[error("invalid integration setup: {0}")]
    InvalidStep(String),
}
