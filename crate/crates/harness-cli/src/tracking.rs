//! The hierarchical closed loop: an outer receding-horizon controller on the
//! translational subsystem commands thrust and the intermediate controls,
//! those are inverted into attitude setpoints, and an inner controller on the
//! rotational subsystem (in scaled space) produces the torques. All four
//! inputs are applied to the plant each step.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use gp_core::{GaussianState, ScalingRecord};
use gpmpc_controller::{mpc_step, Bounds, ControllerState, MPCConfig, StepDiagnostics};
use quadrotor_sim::{attitude_from_intermediate, simulate_step, ControlInputs, QuadrotorState};

use crate::collect::{collect_data, CollectedData};
use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::models::{train_subsystems, TrainedModels};
use crate::trajectory::generate_trajectory;

/// Raw state coordinates are effectively unbounded; the loop only enforces
/// input boxes. This stands in for "no state constraint" in both loops.
const WIDE_STATE_BOUND: f64 = 1e9;

/// Everything logged about a single closed-loop step. Costs are reported in
/// the space their loop optimizes in: raw units for the outer loop, scaled
/// units for the inner one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub reference: [f64; 3],
    pub position: [f64; 3],
    pub thrust: f64,
    pub ux: f64,
    pub uy: f64,
    pub roll_torque: f64,
    pub pitch_torque: f64,
    pub yaw_torque: f64,
    pub roll_setpoint: f64,
    pub pitch_setpoint: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub outer_cost: f64,
    pub inner_cost_scaled: f64,
    pub outer_failsafe: bool,
    pub inner_failsafe: bool,
}

/// Outcome of one closed-loop run.
///
/// Position metrics are raw-space meters. Iteration counts average the
/// active-set iterations of the respective quadratic program per step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackingReport {
    pub steps: Vec<StepRecord>,
    pub rmse_per_axis: [f64; 3],
    pub rmse_position: f64,
    /// Position RMSE over the last quarter of the run.
    pub final_quarter_rmse: f64,
    /// Average distance of the reference from its centroid, the yardstick
    /// tracking errors are compared against.
    pub characteristic_radius: f64,
    /// Applied inputs outside their configured boxes, checked on every step
    /// across both loops. The solver enforces the boxes, so this must be 0.
    pub input_violations: usize,
    pub mean_outer_iterations: f64,
    pub mean_inner_iterations: f64,
    pub failsafe_steps: usize,
    pub failed: bool,
    pub seed: u64,
    pub wall_time_s: f64,
    pub translational_hash: String,
    pub rotational_hash: String,
}

fn identity_weight(dim: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::identity(dim, dim) * scale
}

fn outer_mpc_config(config: &ExperimentConfig) -> Result<MPCConfig, HarnessError> {
    let mpc = &config.mpc;
    let state_bounds = Bounds::new(
        DVector::from_element(6, -WIDE_STATE_BOUND),
        DVector::from_element(6, WIDE_STATE_BOUND),
    )?;
    let input_bounds = Bounds::new(
        DVector::from_vec(vec![mpc.thrust_min, -mpc.tilt_limit, -mpc.tilt_limit]),
        DVector::from_vec(vec![mpc.thrust_max, mpc.tilt_limit, mpc.tilt_limit]),
    )?;
    Ok(MPCConfig::new(
        mpc.horizon,
        identity_weight(6, mpc.q_translational),
        identity_weight(3, mpc.r_translational),
        state_bounds,
        input_bounds,
    )?
    .with_warm_start(mpc.warm_start))
}

fn inner_mpc_config(
    config: &ExperimentConfig,
    scaling: &ScalingRecord,
) -> Result<MPCConfig, HarnessError> {
    let mpc = &config.mpc;
    let state_bounds = Bounds::new(
        scaling
            .state
            .scale_vec(&DVector::from_element(6, -WIDE_STATE_BOUND)),
        scaling
            .state
            .scale_vec(&DVector::from_element(6, WIDE_STATE_BOUND)),
    )?;
    let input_bounds = Bounds::new(
        scaling
            .control
            .scale_vec(&DVector::from_element(3, -mpc.torque_limit)),
        scaling
            .control
            .scale_vec(&DVector::from_element(3, mpc.torque_limit)),
    )?;
    Ok(MPCConfig::new(
        mpc.horizon,
        identity_weight(6, mpc.q_rotational),
        identity_weight(3, mpc.r_rotational),
        state_bounds,
        input_bounds,
    )?
    .with_warm_start(mpc.warm_start))
}

fn vector6_to_dvector(v: &Vector6<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

fn iterations_of(diag: &StepDiagnostics) -> usize {
    diag.solve.as_ref().map_or(0, |s| s.iterations)
}

fn cost_of(diag: &StepDiagnostics) -> f64 {
    diag.solve.as_ref().map_or(f64::NAN, |s| s.cost)
}

/// Runs the hierarchical loop with already-trained models.
///
/// The plant starts on the reference (or at `initial` when given) and is
/// stepped for the configured duration; `seed` drives the plant's process
/// noise. The run is marked failed when the controller fail-safe engages on
/// more than the configured fraction of steps.
pub fn run_tracking_with(
    models: &TrainedModels,
    config: &ExperimentConfig,
    seed: u64,
    initial: Option<QuadrotorState>,
) -> Result<TrackingReport, HarnessError> {
    let started = Instant::now();
    let trajectory = generate_trajectory(&config.trajectory)?;
    let params = config.plant_params()?;
    let dt = config.step_dt();
    let steps = config.run_steps();
    let horizon = config.mpc.horizon;
    let scaling = models
        .rotational
        .dataset()
        .scaling()
        .ok_or_else(|| {
            HarnessError::Request("the rotational model must carry its scaling record".into())
        })?
        .clone();

    let outer_cfg = outer_mpc_config(config)?;
    let inner_cfg = inner_mpc_config(config, &scaling)?;

    let mut state = initial.unwrap_or_else(|| {
        let r = trajectory.reference_state(0);
        QuadrotorState::new(
            Vector6::new(r[0], r[1], r[2], r[3], r[4], r[5]),
            Vector6::zeros(),
        )
        .expect("reference states are finite")
    });

    // Previous controls seed the velocity-form increments: hover thrust
    // clamped into the thrust box outside, zero torques inside.
    let initial_thrust = (config.plant.mass * config.plant.gravity)
        .clamp(config.mpc.thrust_min, config.mpc.thrust_max);
    let mut outer_state = ControllerState::new(
        DVector::from_vec(vec![initial_thrust, 0.0, 0.0]),
        GaussianState::deterministic(vector6_to_dvector(state.translational())),
    );
    let mut inner_state = ControllerState::new(
        scaling.control.scale_vec(&DVector::zeros(3)),
        GaussianState::deterministic(
            scaling.state.scale_vec(&vector6_to_dvector(state.rotational())),
        ),
    );
    let mut previous_setpoint = (0.0_f64, 0.0_f64);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(steps);
    let mut input_violations = 0usize;
    let mut failsafe_steps = 0usize;
    let mut diverged = false;

    for k in 0..steps {
        let measurement = vector6_to_dvector(state.translational());
        let outer_refs: Vec<DVector<f64>> = (1..=horizon)
            .map(|i| trajectory.reference_state(k + i))
            .collect();
        let (outer_u, outer_diag) =
            mpc_step(&mut outer_state, &models.translational, &measurement, &outer_refs, &outer_cfg)?;
        let (thrust, ux, uy) = (outer_u[0], outer_u[1], outer_u[2]);

        let (roll_sp, pitch_sp) = attitude_from_intermediate(ux, uy, 0.0)?;
        let rate = config.plant.control_rate_hz;
        let setpoint_rates = (
            (roll_sp - previous_setpoint.0) * rate,
            (pitch_sp - previous_setpoint.1) * rate,
        );
        previous_setpoint = (roll_sp, pitch_sp);
        let inner_ref = scaling.state.scale_vec(&DVector::from_vec(vec![
            roll_sp,
            setpoint_rates.0,
            pitch_sp,
            setpoint_rates.1,
            0.0,
            0.0,
        ]));
        let inner_refs = vec![inner_ref; horizon];
        let scaled_rotation = scaling.state.scale_vec(&vector6_to_dvector(state.rotational()));
        let (inner_u, inner_diag) =
            mpc_step(&mut inner_state, &models.rotational, &scaled_rotation, &inner_refs, &inner_cfg)?;
        // The box is enforced in scaled space; mapping back to raw torques
        // can overshoot the raw limits by a rounding ulp, which the clamp
        // removes without ever moving an in-box value.
        let torques = scaling
            .control
            .unscale_vec(&inner_u)
            .map(|v| v.clamp(-config.mpc.torque_limit, config.mpc.torque_limit));

        let applied = ControlInputs::new(thrust, torques[0], torques[1], torques[2], ux, uy)?;
        input_violations += count_violations(&applied, config);
        if outer_diag.failsafe || inner_diag.failsafe {
            failsafe_steps += 1;
        }

        let position = state.position();
        records.push(StepRecord {
            step: k,
            t: k as f64 * dt,
            reference: trajectory.position(k),
            position,
            thrust,
            ux,
            uy,
            roll_torque: torques[0],
            pitch_torque: torques[1],
            yaw_torque: torques[2],
            roll_setpoint: roll_sp,
            pitch_setpoint: pitch_sp,
            outer_iterations: iterations_of(&outer_diag),
            inner_iterations: iterations_of(&inner_diag),
            outer_cost: cost_of(&outer_diag),
            inner_cost_scaled: cost_of(&inner_diag),
            outer_failsafe: outer_diag.failsafe,
            inner_failsafe: inner_diag.failsafe,
        });

        state = match simulate_step(&state, &applied, dt, &params, &mut rng) {
            Ok(next) => next,
            // A diverging plant ends the run early; the report still carries
            // the realized steps and is marked failed below.
            Err(quadrotor_sim::SimError::Blowup(_)) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e.into()),
        };
    }

    let metrics = position_metrics(&records);
    let failed =
        diverged || failsafe_steps as f64 > config.mpc.failsafe_fraction * steps as f64;
    Ok(TrackingReport {
        rmse_per_axis: metrics.per_axis,
        rmse_position: metrics.position,
        final_quarter_rmse: metrics.final_quarter,
        characteristic_radius: trajectory.characteristic_radius(),
        input_violations,
        mean_outer_iterations: mean_of(records.iter().map(|r| r.outer_iterations)),
        mean_inner_iterations: mean_of(records.iter().map(|r| r.inner_iterations)),
        failsafe_steps,
        failed,
        seed,
        wall_time_s: started.elapsed().as_secs_f64(),
        translational_hash: models.translational.dataset().content_hash(),
        rotational_hash: models.rotational.dataset().content_hash(),
        steps: records,
    })
}

/// The full experiment from a bare config: collect data, train both models,
/// then run the closed loop. Sub-seeds for the three stages are derived from
/// `seed`, so the entire pipeline is reproducible from `(config, seed)`.
pub fn run_tracking(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(TrackingReport, TrainedModels, CollectedData), HarnessError> {
    let data = collect_data(config, config.gp.training_size, seed)?;
    let models = train_subsystems(&data, &config.gp, seed ^ 0x517c_c1b7_2722_0a95)?;
    let report = run_tracking_with(&models, config, seed ^ 0x6a09_e667_f3bc_c909, None)?;
    Ok((report, models, data))
}

struct PositionMetrics {
    per_axis: [f64; 3],
    position: f64,
    final_quarter: f64,
}

fn position_metrics(records: &[StepRecord]) -> PositionMetrics {
    let count = records.len();
    let mut per_axis_sq = [0.0_f64; 3];
    let mut total_sq = 0.0;
    let quarter_start = count - count / 4;
    let mut quarter_sq = 0.0;
    for (k, r) in records.iter().enumerate() {
        let mut step_sq = 0.0;
        for a in 0..3 {
            let e = r.position[a] - r.reference[a];
            per_axis_sq[a] += e * e;
            step_sq += e * e;
        }
        total_sq += step_sq;
        if k >= quarter_start {
            quarter_sq += step_sq;
        }
    }
    let n = count as f64;
    let quarter_n = (count - quarter_start) as f64;
    PositionMetrics {
        per_axis: per_axis_sq.map(|s| (s / n).sqrt()),
        position: (total_sq / n).sqrt(),
        final_quarter: (quarter_sq / quarter_n).sqrt(),
    }
}

fn mean_of(values: impl Iterator<Item = usize>) -> f64 {
    let mut sum = 0usize;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum as f64 / count as f64
    }
}

fn count_violations(applied: &ControlInputs, config: &ExperimentConfig) -> usize {
    let mpc = &config.mpc;
    let checks = [
        (applied.thrust, mpc.thrust_min, mpc.thrust_max),
        (applied.ux, -mpc.tilt_limit, mpc.tilt_limit),
        (applied.uy, -mpc.tilt_limit, mpc.tilt_limit),
        (applied.roll_torque, -mpc.torque_limit, mpc.torque_limit),
        (applied.pitch_torque, -mpc.torque_limit, mpc.torque_limit),
        (applied.yaw_torque, -mpc.torque_limit, mpc.torque_limit),
    ];
    checks
        .iter()
        .filter(|(value, lo, hi)| value < lo || value > hi)
        .count()
}
