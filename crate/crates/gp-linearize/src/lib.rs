//! Local dynamical models of learned GP dynamics.
//!
//! A Gaussian belief `(mu, Sigma)` is flattened into an extended state
//! `s = [mu, vec(sqrt(Sigma))]` so that one step of belief propagation
//! (GP moment matching plus the covariance update) becomes a deterministic
//! map `s' = F(s, u)`. That map is linearized by central finite differences,
//! yielding the `A`, `B` matrices a predictive controller consumes.

mod error;
mod extended;
mod model;

pub use error::LinearizeError;
pub use extended::{extend, ExtendedState};
pub use model::{advance, linearize, linearize_mean_columns, DerivativeScheme, LocalModel};
