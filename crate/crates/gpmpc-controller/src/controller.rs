use gp_core::{GaussianState, TrainedGP};
use gp_linearize::{
    extend, linearize, linearize_mean_columns, DerivativeScheme, LinearizeError,
};
use nalgebra::DVector;
use qp_activeset::{solve, QPSolution, SolveStatus};

use crate::condense::build_condensed;
use crate::config::MPCConfig;
use crate::error::MpcError;

/// Relative tolerance for snapping an applied control onto a bound it
/// overshoots. The KKT solve works at condensed-cost magnitudes, so roundoff
/// in the recovered control scales with the bound size rather than with
/// machine epsilon alone; overshoot inside the band is clamped onto the
/// bound, anything beyond it is treated as a failed solve.
const CONTROL_SNAP_TOL: f64 = 1e-6;

/// Clamp `value` onto `[lo, hi]` when it overshoots by no more than solver
/// roundoff; `None` flags a violation too large to blame on roundoff.
fn snap_into_bounds(value: f64, lo: f64, hi: f64) -> Option<f64> {
    let band = CONTROL_SNAP_TOL * (1.0 + lo.abs().max(hi.abs()));
    if value > hi + band || value < lo - band {
        None
    } else {
        Some(value.clamp(lo, hi))
    }
}

/// Per-loop controller memory: the last applied control, the last QP
/// solution for warm starting, and the belief the previous step was computed
/// from (used to form the state increment of the velocity formulation).
#[derive(Debug, Clone)]
pub struct ControllerState {
    previous_control: DVector<f64>,
    previous_solution: Option<QPSolution>,
    belief: GaussianState,
}

impl ControllerState {
    /// Starts a control loop from an initial control (which must lie within
    /// the input bounds of the configuration used later) and the initial
    /// state belief. The first step sees a zero state increment.
    pub fn new(initial_control: DVector<f64>, belief: GaussianState) -> Self {
        Self { previous_control: initial_control, previous_solution: None, belief }
    }

    pub fn previous_control(&self) -> &DVector<f64> {
        &self.previous_control
    }

    pub fn belief(&self) -> &GaussianState {
        &self.belief
    }

    pub fn previous_solution(&self) -> Option<&QPSolution> {
        self.previous_solution.as_ref()
    }
}

/// Outcome of the quadratic solve inside one controller step.
#[derive(Debug, Clone)]
pub struct QpStepInfo {
    pub iterations: usize,
    pub status: SolveStatus,
    /// Predicted horizon cost at the optimum, in original cost units.
    pub cost: f64,
    pub active_set_size: usize,
}

/// Diagnostics for one controller step. `solve` is `None` when the fail-safe
/// engaged and the previous control was held.
#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    pub solve: Option<QpStepInfo>,
    pub dropped_coordinates: Vec<(usize, usize)>,
    pub clamped_rows: usize,
    pub failsafe: bool,
}

/// Advances the controller by one step: reset the belief to the measurement,
/// linearize the learned dynamics at the current operating point, assemble
/// and solve the condensed problem, and apply the first control increment.
///
/// The applied control always satisfies the input bounds; state bounds are
/// enforced through the tightened rows of the quadratic program. If the
/// linearization fails numerically the previous control is held and the step
/// is flagged instead of failing the loop.
pub fn mpc_step(
    ctrl: &mut ControllerState,
    gp: &TrainedGP,
    measurement: &DVector<f64>,
    refs: &[DVector<f64>],
    cfg: &MPCConfig,
) -> Result<(DVector<f64>, StepDiagnostics), MpcError> {
    let n = cfg.state_dim();
    let m = cfg.control_dim();
    if gp.state_dim() != n || gp.control_dim() != m {
        return Err(MpcError::Dimension(format!(
            "model is {}-state / {}-control, config expects {n}/{m}",
            gp.state_dim(),
            gp.control_dim()
        )));
    }
    if measurement.len() != n || measurement.iter().any(|v| !v.is_finite()) {
        return Err(MpcError::Dimension(format!(
            "measurement must be {n} finite coordinates"
        )));
    }
    if !cfg.input_bounds().contains(&ctrl.previous_control) {
        return Err(MpcError::Config(
            "previous control lies outside the input bounds".into(),
        ));
    }

    let s_prev = extend(&ctrl.belief)?;
    let belief_now = GaussianState::deterministic(measurement.clone());
    let s_k = extend(&belief_now)?;
    let delta_s = s_k.as_vector() - s_prev.as_vector();

    // With the belief reset each step, increments have a zero square-root
    // tail, so a horizon of one only ever multiplies the mean columns of A;
    // longer horizons form powers of A and need the full Jacobian.
    let scheme = DerivativeScheme::default();
    let linearized = if cfg.horizon() == 1 {
        linearize_mean_columns(gp, &s_k, &ctrl.previous_control, scheme)
    } else {
        linearize(gp, &s_k, &ctrl.previous_control, scheme)
    };
    let model = match linearized {
        Ok(model) => model,
        Err(LinearizeError::Dimension(msg)) => return Err(MpcError::Dimension(msg)),
        Err(_) => {
            // Fail-safe: hold the previous control for this step.
            ctrl.belief = belief_now;
            ctrl.previous_solution = None;
            let held = ctrl.previous_control.clone();
            return Ok((
                held,
                StepDiagnostics {
                    solve: None,
                    dropped_coordinates: Vec::new(),
                    clamped_rows: 0,
                    failsafe: true,
                },
            ));
        }
    };

    let condensed =
        build_condensed(&model, &s_k, &delta_s, &ctrl.previous_control, refs, cfg)?;
    let problem = condensed.problem();
    let warm = if cfg.warm_start() {
        ctrl.previous_solution.as_ref().map(|s| &s.working_set)
    } else {
        None
    };
    let start = DVector::zeros(cfg.horizon() * m);
    let budget = 50 + 10 * problem.num_constraints();
    let solution = solve(problem, &start, warm, budget)?;
    if solution.status == SolveStatus::InfeasibleStart {
        // The zero increment is feasible by construction.
        return Err(MpcError::Internal(
            "condensed problem rejected the zero increment as infeasible".into(),
        ));
    }

    let mut control = &ctrl.previous_control + solution.delta_u.rows(0, m);
    for c in 0..m {
        let lo = cfg.input_bounds().lower()[c];
        let hi = cfg.input_bounds().upper()[c];
        control[c] = snap_into_bounds(control[c], lo, hi).ok_or_else(|| {
            MpcError::Internal(format!(
                "applied control violates its bounds in coordinate {c}: \
                 {} outside [{lo}, {hi}]",
                control[c]
            ))
        })?;
    }

    let info = QpStepInfo {
        iterations: solution.iterations,
        status: solution.status,
        cost: 2.0 * problem.objective(&solution.delta_u),
        active_set_size: solution.working_set.len(),
    };
    let diagnostics = StepDiagnostics {
        solve: Some(info),
        dropped_coordinates: condensed.dropped_coordinates().to_vec(),
        clamped_rows: condensed.clamped_rows(),
        failsafe: false,
    };

    ctrl.previous_control = control.clone();
    ctrl.previous_solution = Some(solution);
    ctrl.belief = belief_now;
    Ok((control, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::snap_into_bounds;

    #[test]
    fn interior_values_pass_through_unchanged() {
        assert_eq!(snap_into_bounds(0.13, -0.2, 0.2), Some(0.13));
        assert_eq!(snap_into_bounds(-0.2, -0.2, 0.2), Some(-0.2));
    }

    #[test]
    fn roundoff_overshoot_clamps_onto_the_bound() {
        let grazed = 0.2 + 1.4e-9;
        assert_eq!(snap_into_bounds(grazed, -0.2, 0.2), Some(0.2));
        let grazed_low = -0.2 - 5e-8;
        assert_eq!(snap_into_bounds(grazed_low, -0.2, 0.2), Some(-0.2));
    }

    #[test]
    fn band_scales_with_the_bound_magnitude() {
        // 5e-5 is roundoff for a bound of 100 but a violation for one of 0.2.
        assert_eq!(snap_into_bounds(100.00005, 0.0, 100.0), Some(100.0));
        assert_eq!(snap_into_bounds(0.20005, -0.2, 0.2), None);
    }

    #[test]
    fn gross_violations_are_rejected() {
        assert_eq!(snap_into_bounds(0.21, -0.2, 0.2), None);
        assert_eq!(snap_into_bounds(-1.0, -0.2, 0.2), None);
    }
}
