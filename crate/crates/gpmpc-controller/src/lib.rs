//! Receding-horizon control on top of a learned Gaussian-process dynamics
//! model.
//!
//! Each step flattens the state belief into an extended vector (mean plus
//! square root of covariance), linearizes the learned one-step dynamics
//! there, and condenses the horizon into a small dense quadratic program in
//! the stacked control increments. The stage cost is the expectation of a
//! quadratic — the usual tracking term plus a trace coupling with the
//! predicted covariance — and state boxes are tightened by two predicted
//! standard deviations so the constraints hold with 95% confidence. The
//! active set of the previous solution warm-starts the next solve.

mod condense;
mod config;
mod controller;
mod cost;
mod error;

pub use condense::{build_condensed, CondensedMatrices, CondensedQp};
pub use config::{Bounds, MPCConfig};
pub use controller::{mpc_step, ControllerState, QpStepInfo, StepDiagnostics};
pub use cost::{expected_cost, tighten_bounds};
pub use error::MpcError;
