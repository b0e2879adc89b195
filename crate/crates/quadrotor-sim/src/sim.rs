//! Time stepping for the plant model.

use nalgebra::Vector6;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::controls::ControlInputs;
use crate::dynamics::{rotational_derivative, translational_derivative};
use crate::error::SimError;
use crate::params::QuadrotorParams;
use crate::state::QuadrotorState;

/// Number of internal steps a single control interval is divided into.
pub const DEFAULT_SUBSTEPS: usize = 10;

fn derivative(
    translational: &Vector6<f64>,
    rotational: &Vector6<f64>,
    u: &ControlInputs,
    params: &QuadrotorParams,
) -> (Vector6<f64>, Vector6<f64>) {
    (
        translational_derivative(translational, u, params),
        rotational_derivative(rotational, u, params),
    )
}

/// Integrates the deterministic dynamics over `dt` with a classical
/// fourth-order Runge-Kutta scheme split into `substeps` equal pieces.
///
/// The controls are held constant over the whole interval, which is exactly
/// the zero-order hold a discrete controller applies. Angles are wrapped once
/// at the end; intermediate stages run on the unwrapped values so the stage
/// arithmetic never sees an artificial discontinuity.
pub fn integrate(
    state: &QuadrotorState,
    u: &ControlInputs,
    dt: f64,
    substeps: usize,
    params: &QuadrotorParams,
) -> Result<QuadrotorState, SimError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(SimError::InvalidStep(format!(
            "step size must be finite and positive, got {dt}"
        )));
    }
    if substeps == 0 {
        return Err(SimError::InvalidStep("substep count must be at least 1".into()));
    }

    let h = dt / substeps as f64;
    let mut translational = *state.translational();
    let mut rotational = *state.rotational();
    for _ in 0..substeps {
        let (k1_t, k1_r) = derivative(&translational, &rotational, u, params);
        let (k2_t, k2_r) = derivative(
            &(translational + k1_t * (h / 2.0)),
            &(rotational + k1_r * (h / 2.0)),
            u,
            params,
        );
        let (k3_t, k3_r) = derivative(
            &(translational + k2_t * (h / 2.0)),
            &(rotational + k2_r * (h / 2.0)),
            u,
            params,
        );
        let (k4_t, k4_r) = derivative(
            &(translational + k3_t * h),
            &(rotational + k3_r * h),
            u,
            params,
        );
        translational += (k1_t + k2_t * 2.0 + k3_t * 2.0 + k4_t) * (h / 6.0);
        rotational += (k1_r + k2_r * 2.0 + k3_r * 2.0 + k4_r) * (h / 6.0);
    }

    QuadrotorState::new(translational, rotational).map_err(|_| {
        SimError::Blowup(format!(
            "state became non-finite after integrating dt={dt} with inputs {u:?}"
        ))
    })
}

/// Advances the plant by one control interval and injects process noise.
///
/// Runs [`integrate`] with [`DEFAULT_SUBSTEPS`] internal Runge-Kutta steps,
/// then adds independent zero-mean Gaussian noise to the three linear
/// velocities and the three body rates, with the standard deviations taken
/// from the parameter set. Positions and angles are not perturbed directly.
pub fn simulate_step<R: Rng + ?Sized>(
    state: &QuadrotorState,
    u: &ControlInputs,
    dt: f64,
    params: &QuadrotorParams,
    rng: &mut R,
) -> Result<QuadrotorState, SimError> {
    let propagated = integrate(state, u, dt, DEFAULT_SUBSTEPS, params)?;

    let noise = params.disturbance_std();
    let mut translational = *propagated.translational();
    let mut rotational = *propagated.rotational();
    if noise.translational > 0.0 {
        for slot in [1, 3, 5] {
            translational[slot] += noise.translational * rng.sample::<f64, _>(StandardNormal);
        }
    }
    if noise.rotational > 0.0 {
        for slot in [1, 3, 5] {
            rotational[slot] += noise.rotational * rng.sample::<f64, _>(StandardNormal);
        }
    }

    QuadrotorState::new(translational, rotational).map_err(|_| {
        SimError::Blowup("state became non-finite after noise injection".into())
    })
}
