//! Gaussian-process regression over one-step dynamics differences.
//!
//! Models the change of a state over one sampling period, `delta_x = f(x, u)`,
//! with one independent SE-ARD GP per state dimension. Besides standard
//! training (log-marginal-likelihood maximization in log-hyperparameter
//! space) and point prediction, the crate provides exact moment matching for
//! Gaussian-distributed inputs — predictive mean, full covariance, and the
//! input-output covariance needed to propagate a Gaussian state belief
//! through the learned dynamics.

mod dataset;
mod error;
mod hyper;
mod kernel;
mod likelihood;
mod optim;
mod predict;
mod scaling;
mod state;
mod train;

pub use dataset::{Dataset, ScalingRecord};
pub use error::GpError;
pub use hyper::Hyperparameters;
pub use kernel::kernel_eval;
pub use likelihood::log_marginal_likelihood;
pub use predict::{predict_point, predict_uncertain, propagate, UncertainPrediction};
pub use scaling::ScalingTransform;
pub use state::{clamp_psd, GaussianState, UncertainInput, PSD_CLAMP_TOL};
pub use train::{load_model, save_model, train, DimensionReport, TrainConfig, TrainedGP};
