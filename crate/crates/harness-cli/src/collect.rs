//! Data collection: drive the plant along the reference with a simple
//! baseline controller and log one-step transitions for both subsystems.
//!
//! The baseline is a PD loop with gravity compensation plus a little
//! exploration noise on every command. It only has to be stable and roughly
//! on-reference: the learned models care about the (state, input, difference)
//! tuples, not about how well the collecting controller tracks.

use nalgebra::{DMatrix, DVector, Vector6};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use gp_core::{Dataset, ScalingRecord, ScalingTransform};
use quadrotor_sim::{
    attitude_from_intermediate, simulate_step, ControlInputs, QuadrotorState,
};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::trajectory::{generate_trajectory, Trajectory};

/// Position feedback gain of the baseline, tuned for a 1 Hz double
/// integrator: acceleration `0.4 e_p + 0.8 e_v` is a deadbeat-ish stable loop.
const POSITION_GAIN: f64 = 0.4;
const VELOCITY_GAIN: f64 = 0.8;
const ATTITUDE_GAIN: f64 = 0.4;
const RATE_GAIN: f64 = 0.8;

/// Interval both subsystems' observations are scaled into.
pub const SCALED_LO: f64 = 0.1;
pub const SCALED_HI: f64 = 0.9;

/// Everything `collect_data` produces: per-subsystem supervised datasets and
/// the raw logs they were cut from.
///
/// The translational dataset stays in raw units; the rotational dataset is
/// stored in scaled space with its [`ScalingRecord`] attached, because the
/// rotational loop is always modeled and controlled there.
#[derive(Debug, Clone)]
pub struct CollectedData {
    pub translational: Dataset,
    pub rotational: Dataset,
    pub states: Vec<QuadrotorState>,
    pub controls: Vec<ControlInputs>,
}

impl CollectedData {
    /// Scaling record of the rotational dataset.
    pub fn rotational_scaling(&self) -> &ScalingRecord {
        self.rotational
            .scaling()
            .expect("rotational dataset always carries its scaling")
    }
}

struct Baseline<'a> {
    config: &'a ExperimentConfig,
}

impl Baseline<'_> {
    fn controls<R: Rng>(
        &self,
        state: &QuadrotorState,
        reference: &DVector<f64>,
        rng: &mut R,
    ) -> ControlInputs {
        let mpc = &self.config.mpc;
        let gp = &self.config.gp;
        let mass = self.config.plant.mass;
        let t = state.translational();

        // Desired acceleration from the position/velocity errors, converted
        // into a thrust magnitude and thrust-axis projections.
        let accel = [
            POSITION_GAIN * (reference[0] - t[0]) + VELOCITY_GAIN * (reference[1] - t[1]),
            POSITION_GAIN * (reference[2] - t[2]) + VELOCITY_GAIN * (reference[3] - t[3]),
            POSITION_GAIN * (reference[4] - t[4]) + VELOCITY_GAIN * (reference[5] - t[5]),
        ];
        let force = [
            mass * accel[0],
            mass * accel[1],
            mass * (accel[2] + self.config.plant.gravity),
        ];
        let magnitude = (force[0] * force[0] + force[1] * force[1] + force[2] * force[2]).sqrt();
        let (mut ux, mut uy) = if magnitude > 1e-9 {
            (force[0] / magnitude, force[1] / magnitude)
        } else {
            (0.0, 0.0)
        };
        let mut thrust = magnitude + gp.exploration_thrust_std * normal(rng);
        ux += gp.exploration_tilt_std * normal(rng);
        uy += gp.exploration_tilt_std * normal(rng);
        thrust = thrust.clamp(mpc.thrust_min, mpc.thrust_max);
        ux = ux.clamp(-mpc.tilt_limit, mpc.tilt_limit);
        uy = uy.clamp(-mpc.tilt_limit, mpc.tilt_limit);

        // Attitude setpoints realizing the commanded projections, tracked by
        // a PD torque loop on each angle.
        let (roll_sp, pitch_sp) = attitude_from_intermediate(ux, uy, 0.0)
            .expect("clamped projections are always invertible");
        let r = state.rotational();
        let [ix, iy, iz] = self.config.plant.inertia;
        let arm = self.config.plant.arm_length;
        let torque = |inertia: f64, lever: f64, angle_error: f64, rate: f64, rng: &mut R| {
            let alpha = ATTITUDE_GAIN * angle_error - RATE_GAIN * rate;
            (inertia * alpha / lever + gp.exploration_torque_std * normal(rng))
                .clamp(-mpc.torque_limit, mpc.torque_limit)
        };
        let roll_torque = torque(ix, arm, roll_sp - r[0], r[1], rng);
        let pitch_torque = torque(iy, arm, pitch_sp - r[2], r[3], rng);
        let yaw_torque = torque(iz, 1.0, -r[4], r[5], rng);

        ControlInputs::new(thrust, roll_torque, pitch_torque, yaw_torque, ux, uy)
            .expect("clamped baseline commands are always valid")
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// Runs the baseline controller along the configured reference and logs
/// exactly `count` transitions per subsystem.
///
/// The translational dataset holds raw `(state, [thrust, ux, uy])` inputs;
/// the rotational dataset holds `(state, torques)` scaled into
/// `[0.1, 0.9]` with the fitted transforms recorded. Both use difference
/// targets. A diverging plant aborts with a partial-data error.
pub fn collect_data(
    config: &ExperimentConfig,
    count: usize,
    seed: u64,
) -> Result<CollectedData, HarnessError> {
    if count < 2 {
        return Err(HarnessError::Request(format!(
            "need at least 2 transitions, asked for {count}"
        )));
    }
    let trajectory = generate_trajectory(&config.trajectory)?;
    let params = config.plant_params()?;
    let dt = config.step_dt();
    let baseline = Baseline { config };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut state = initial_state(&trajectory);
    let mut states = vec![state.clone()];
    let mut controls = Vec::with_capacity(count);
    for k in 0..count {
        let reference = trajectory.reference_state(k + 1);
        let u = baseline.controls(&state, &reference, &mut rng);
        state = simulate_step(&state, &u, dt, &params, &mut rng).map_err(|e| {
            HarnessError::Collection {
                collected: k,
                reason: e.to_string(),
            }
        })?;
        controls.push(u);
        states.push(state.clone());
    }

    let translational = Dataset::from_trajectory(
        &states
            .iter()
            .map(|s| vector6_to_dvector(s.translational()))
            .collect::<Vec<_>>(),
        &controls
            .iter()
            .map(|u| DVector::from_vec(vec![u.thrust, u.ux, u.uy]))
            .collect::<Vec<_>>(),
        None,
    )?;

    let raw_rot_states: Vec<DVector<f64>> = states
        .iter()
        .map(|s| vector6_to_dvector(s.rotational()))
        .collect();
    let raw_torques: Vec<DVector<f64>> = controls
        .iter()
        .map(|u| DVector::from_vec(vec![u.roll_torque, u.pitch_torque, u.yaw_torque]))
        .collect();
    let state_scaling = fit_columns(&raw_rot_states);
    let control_scaling = fit_columns(&raw_torques);
    let scaled_states: Vec<DVector<f64>> = raw_rot_states
        .iter()
        .map(|v| state_scaling.scale_vec(v))
        .collect();
    let scaled_torques: Vec<DVector<f64>> = raw_torques
        .iter()
        .map(|v| control_scaling.scale_vec(v))
        .collect();
    let rotational = Dataset::from_trajectory(
        &scaled_states,
        &scaled_torques,
        Some(ScalingRecord {
            state: state_scaling,
            control: control_scaling,
        }),
    )?;

    Ok(CollectedData {
        translational,
        rotational,
        states,
        controls,
    })
}

fn initial_state(trajectory: &Trajectory) -> QuadrotorState {
    let r = trajectory.reference_state(0);
    QuadrotorState::new(
        Vector6::new(r[0], r[1], r[2], r[3], r[4], r[5]),
        Vector6::zeros(),
    )
    .expect("reference states are finite")
}

fn vector6_to_dvector(v: &Vector6<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

fn fit_columns(rows: &[DVector<f64>]) -> ScalingTransform {
    let matrix = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    ScalingTransform::fit(&matrix, SCALED_LO, SCALED_HI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requested_count_is_exactly_what_both_datasets_hold() {
        let config = ExperimentConfig::default();
        let data = collect_data(&config, 189, 0).unwrap();
        assert_eq!(data.translational.len(), 189);
        assert_eq!(data.rotational.len(), 189);
        assert_eq!(data.states.len(), 190);
        assert_eq!(data.controls.len(), 189);
    }

    #[test]
    fn targets_are_exact_state_differences() {
        let config = ExperimentConfig::default();
        let data = collect_data(&config, 24, 3).unwrap();
        for k in 0..24 {
            let here = data.states[k].translational();
            let next = data.states[k + 1].translational();
            for j in 0..6 {
                assert_eq!(data.translational.targets()[(k, j)], next[j] - here[j]);
            }
        }
    }

    #[test]
    fn equal_seeds_reproduce_identical_datasets() {
        let config = ExperimentConfig::default();
        let a = collect_data(&config, 30, 11).unwrap();
        let b = collect_data(&config, 30, 11).unwrap();
        assert_eq!(a.translational, b.translational);
        assert_eq!(a.rotational, b.rotational);

        let c = collect_data(&config, 30, 12).unwrap();
        assert_ne!(a.translational, c.translational);
    }

    #[test]
    fn rotational_observations_live_in_the_scaled_interval() {
        let config = ExperimentConfig::default();
        let data = collect_data(&config, 40, 7).unwrap();
        assert!(data.rotational.scaling().is_some());
        for v in data.rotational.inputs().iter() {
            assert!(
                (SCALED_LO - 1e-12..=SCALED_HI + 1e-12).contains(v),
                "scaled observation {v} escaped the target interval"
            );
        }
    }

    #[test]
    fn too_few_transitions_are_rejected() {
        let config = ExperimentConfig::default();
        assert!(matches!(
            collect_data(&config, 1, 0),
            Err(HarnessError::Request(_))
        ));
    }

    #[test]
    fn plant_divergence_reports_partial_progress() {
        let mut config = ExperimentConfig::default();
        // Absurd process noise overflows the gyroscopic products on the step
        // after the first noise injection.
        config.noise.rotational_std = 1e200;
        let err = collect_data(&config, 10, 0);
        match err {
            Err(HarnessError::Collection { collected, .. }) => assert!(collected < 10),
            other => panic!("expected a collection error, got {other:?}"),
        }
    }
}
