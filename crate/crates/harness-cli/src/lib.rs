//! Experiment driver for the learned-dynamics receding-horizon control
//! toolkit.
//!
//! The pieces compose in the order a study runs them: generate a reference
//! trajectory, collect transitions by flying a simple baseline along it,
//! train one GP per subsystem (the rotational one in scaled observation
//! space), sweep the training-set size to chart prediction quality, and
//! close the hierarchical loop — an outer translational controller commands
//! thrust and thrust-axis projections, an inner rotational controller tracks
//! the implied attitude with torques. Every stage is a pure function of its
//! configuration and a seed, and reports embed the config snapshot plus
//! content hashes of the datasets involved.

mod collect;
mod config;
mod error;
mod models;
mod report;
mod sweep;
mod tracking;
mod trajectory;

pub use collect::{collect_data, CollectedData, SCALED_HI, SCALED_LO};
pub use config::{
    ExperimentConfig, GpSection, MpcSection, NoiseSection, PlantSection, TrajectorySection,
};
pub use error::HarnessError;
pub use models::{initial_hyperparameters, train_config, train_subsystems, TrainedModels};
pub use report::{render_summary, steps_csv, sweep_csv, ExperimentSummary, TrackingSummary};
pub use sweep::{evaluate, training_sweep, SweepCell, SweepReport};
pub use tracking::{run_tracking, run_tracking_with, StepRecord, TrackingReport};
pub use trajectory::{
    generate_trajectory, lorenz_advance, Trajectory, TrajectoryKind, TrajectorySample,
};
