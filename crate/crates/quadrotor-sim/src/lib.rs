//! Rigid-body quadrotor plant used as the ground-truth system in the
//! closed-loop experiments.
//!
//! The model keeps the translational and rotational halves of the state
//! separate. Translational accelerations are driven by the total thrust and
//! the intermediate controls `ux`/`uy` (the projections of the thrust axis
//! onto the world x and y axes), so they never reference the attitude
//! directly; the rotational half is torque-driven rigid-body dynamics about
//! the principal axes with gyroscopic coupling. A hierarchical controller can
//! therefore command `(thrust, ux, uy)` for position, convert the commanded
//! projections into roll/pitch setpoints with [`attitude_from_intermediate`],
//! and track those with the torque loop.
//!
//! Stepping happens with a fixed-step fourth-order Runge-Kutta scheme that
//! subdivides each control interval, followed by additive Gaussian noise on
//! the velocity and rate components. All randomness comes from a caller
//! supplied generator, so trajectories are reproducible from a seed.

mod controls;
mod dynamics;
mod error;
mod params;
mod sim;
mod state;

pub use controls::ControlInputs;
pub use dynamics::{
    attitude_from_intermediate, intermediate_controls, rotational_derivative,
    translational_derivative,
};
pub use error::SimError;
pub use params::{DisturbanceStd, QuadrotorParams};
pub use sim::{integrate, simulate_step, DEFAULT_SUBSTEPS};
pub use state::{wrap_angle, QuadrotorState};
