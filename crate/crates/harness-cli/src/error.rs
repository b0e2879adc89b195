//! Error type for the experiment driver.

use thiserror::Error;

/// Failures raised while configuring or running an experiment.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// A configuration file or value failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    /// The plant diverged while collecting data; `collected` transitions were
    /// gathered before the failure.
    #[error("data collection aborted after {collected} transitions: {reason}")]
    Collection { collected: usize, reason: String },

    /// An experiment asked for something the collected data cannot provide.
    #[error("invalid experiment request: {0}")]
    Request(String),

    #[error("config file could not be parsed: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("report could not be serialized: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Gp(#[from] gp_core::GpError),

    #[error(transparent)]
    Mpc(#[from] gpmpc_controller::MpcError),

    #[error(transparent)]
    Sim(#[from] quadrotor_sim::SimError),
}
