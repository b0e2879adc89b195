use std::collections::HashSet;

use nalgebra::DVector;

use crate::error::QpError;
use crate::kkt::{kkt_with, step_length};
use crate::problem::QPProblem;

const FEASIBILITY_TOL: f64 = 1e-9;
const WARM_ACTIVE_TOL: f64 = 1e-7;
const MULTIPLIER_TOL: f64 = -1e-9;
const STATIONARY_TOL: f64 = 1e-10;
const ANTI_CYCLE_EPS: f64 = 1e-10;

/// Ordered set of constraint rows currently treated as equalities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkingSet {
    indices: Vec<usize>,
}

impl WorkingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from explicit rows, rejecting duplicates and rows outside
    /// the problem (validated again at solve time against the actual problem).
    pub fn from_indices(indices: Vec<usize>) -> Result<Self, QpError> {
        let mut seen = HashSet::new();
        for &i in &indices {
            if !seen.insert(i) {
                return Err(QpError::Parse(format!("duplicate working-set row {i}")));
            }
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.indices.contains(&row)
    }

    fn push(&mut self, row: usize) {
        debug_assert!(!self.contains(row));
        self.indices.push(row);
    }

    fn remove_at(&mut self, position: usize) {
        self.indices.remove(position);
    }
}

/// How the iteration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// First-order conditions hold: zero step and nonnegative multipliers.
    Optimal,
    /// Iteration budget exhausted; the iterate is feasible but not proven
    /// optimal.
    MaxIterations,
    /// The supplied starting point violates a constraint, so the primal
    /// iteration cannot begin.
    InfeasibleStart,
}

#[derive(Debug, Clone)]
pub struct QPSolution {
    /// Final iterate.
    pub delta_u: DVector<f64>,
    /// Multipliers for the final working set, aligned with `working_set`.
    pub multipliers: DVector<f64>,
    /// Rows active at termination, usable to warm start the next problem.
    pub working_set: WorkingSet,
    /// Number of KKT iterations performed.
    pub iterations: usize,
    pub status: SolveStatus,
}

/// Primal active-set iteration from a feasible starting point.
///
/// Each pass solves the equality-constrained subproblem for the current
/// working set. A zero step with nonnegative multipliers is optimal; a
/// negative multiplier releases its row; otherwise the step advances until
/// the first blocking row, which joins the set. A warm-start set is pruned
/// to rows actually active at `start` before the first iteration.
pub fn solve(
    qp: &QPProblem,
    start: &DVector<f64>,
    warm: Option<&WorkingSet>,
    max_iterations: usize,
) -> Result<QPSolution, QpError> {
    if start.len() != qp.dim() {
        return Err(QpError::Dimension(format!(
            "start has {} entries, problem dimension is {}",
            start.len(),
            qp.dim()
        )));
    }
    if let Some(ws) = warm {
        for &row in ws.indices() {
            if row >= qp.num_constraints() {
                return Err(QpError::BadIndex { index: row, total: qp.num_constraints() });
            }
        }
    }
    if qp.max_violation(start) > FEASIBILITY_TOL {
        return Ok(QPSolution {
            delta_u: start.clone(),
            multipliers: DVector::zeros(0),
            working_set: WorkingSet::new(),
            iterations: 0,
            status: SolveStatus::InfeasibleStart,
        });
    }

    let mut x = start.clone();
    let mut ws = initial_working_set(qp, start, warm);
    let mut psi_eff = qp.psi().clone();
    let mut visited: HashSet<(Vec<usize>, Vec<i64>)> = HashSet::new();
    let mut perturbations = 0usize;
    let mut last_multipliers = DVector::zeros(0);

    for iteration in 1..=max_iterations {
        // Revisiting a (working set, iterate) pair means the plain iteration
        // is cycling on a degenerate vertex; nudge the gradient by a fixed,
        // deterministic pattern and continue on the perturbed problem.
        if !visited.insert(state_key(&ws, &x)) {
            perturbations += 1;
            for (i, entry) in psi_eff.iter_mut().enumerate() {
                let sign = if (i + perturbations) % 2 == 0 { 1.0 } else { -1.0 };
                *entry += sign * ANTI_CYCLE_EPS * perturbations as f64;
            }
            visited.clear();
            visited.insert(state_key(&ws, &x));
        }

        let (delta, lambda) = kkt_with(qp, &psi_eff, ws.indices(), &x)?;
        last_multipliers = lambda;

        if delta.amax() <= STATIONARY_TOL * (1.0 + x.amax()) {
            let (min_position, min_value) = match argmin(&last_multipliers) {
                Some(pair) => pair,
                None => {
                    return Ok(finished(qp, x, last_multipliers, ws, iteration));
                }
            };
            if min_value < MULTIPLIER_TOL {
                ws.remove_at(min_position);
                continue;
            }
            return Ok(finished(qp, x, last_multipliers, ws, iteration));
        }

        let (kappa, blocking) = step_length(qp, ws.indices(), &x, &delta);
        x += delta * kappa;
        debug_assert!(
            qp.max_violation(&x) <= FEASIBILITY_TOL * 10.0,
            "iterate drifted infeasible: {}",
            qp.max_violation(&x)
        );
        if kappa < 1.0 {
            if let Some(row) = blocking {
                ws.push(row);
            }
        }
    }

    Ok(QPSolution {
        delta_u: x,
        multipliers: last_multipliers,
        working_set: ws,
        iterations: max_iterations,
        status: SolveStatus::MaxIterations,
    })
}

fn finished(
    qp: &QPProblem,
    x: DVector<f64>,
    multipliers: DVector<f64>,
    ws: WorkingSet,
    iterations: usize,
) -> QPSolution {
    debug_assert!(qp.max_violation(&x) <= FEASIBILITY_TOL * 10.0);
    QPSolution {
        delta_u: x,
        multipliers,
        working_set: ws,
        iterations,
        status: SolveStatus::Optimal,
    }
}

/// Warm sets are pruned to rows that still hold with near equality; a cold
/// start activates rows that are tight at the starting point up to the
/// feasibility tolerance.
fn initial_working_set(
    qp: &QPProblem,
    start: &DVector<f64>,
    warm: Option<&WorkingSet>,
) -> WorkingSet {
    let mut ws = WorkingSet::new();
    match warm {
        Some(seed) => {
            for &row in seed.indices() {
                let slack =
                    qp.bounds()[row] - qp.constraints().row(row).dot(&start.transpose());
                if slack.abs() <= WARM_ACTIVE_TOL {
                    ws.push(row);
                }
            }
        }
        None => {
            for row in 0..qp.num_constraints() {
                let slack =
                    qp.bounds()[row] - qp.constraints().row(row).dot(&start.transpose());
                if slack.abs() <= FEASIBILITY_TOL {
                    ws.push(row);
                }
            }
        }
    }
    ws
}

fn argmin(values: &DVector<f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, current)) if v >= current => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

fn state_key(ws: &WorkingSet, x: &DVector<f64>) -> (Vec<usize>, Vec<i64>) {
    let mut rows = ws.indices().to_vec();
    rows.sort_unstable();
    let quantized = x.iter().map(|&v| (v / 1e-12).round() as i64).collect();
    (rows, quantized)
}
