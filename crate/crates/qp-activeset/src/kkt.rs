use nalgebra::{DMatrix, DVector};

use crate::error::QpError;
use crate::problem::QPProblem;
use crate::qr::pivoted_qr;

const RANK_TOL: f64 = 1e-10;
const STEP_DENOMINATOR_TOL: f64 = 1e-12;

/// Solves the equality-constrained subproblem for the rows in `working_set`:
/// minimize the quadratic over `current + delta` subject to those rows
/// holding with equality. Returns the step and one multiplier per
/// working-set row (in working-set order).
pub fn kkt_step(
    qp: &QPProblem,
    working_set: &[usize],
    current: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), QpError> {
    kkt_with(qp, qp.psi(), working_set, current)
}

/// Same as [`kkt_step`] but against an explicit gradient vector, so the
/// solver can pass a perturbed objective without rebuilding the problem.
pub(crate) fn kkt_with(
    qp: &QPProblem,
    psi: &DVector<f64>,
    working_set: &[usize],
    current: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), QpError> {
    let dim = qp.dim();
    if current.len() != dim {
        return Err(QpError::Dimension(format!(
            "iterate has {} entries, problem dimension is {dim}",
            current.len()
        )));
    }
    for &row in working_set {
        if row >= qp.num_constraints() {
            return Err(QpError::BadIndex { index: row, total: qp.num_constraints() });
        }
    }

    let r1 = -psi - qp.phi() * current;
    if working_set.is_empty() {
        let delta = qp.phi_cholesky().solve(&r1);
        return Ok((delta, DVector::zeros(0)));
    }

    let m1 = working_set.len();
    let mut g_a = DMatrix::zeros(m1, dim);
    let mut r2 = DVector::zeros(m1);
    for (k, &row) in working_set.iter().enumerate() {
        g_a.set_row(k, &qp.constraints().row(row));
        r2[k] = qp.bounds()[row] - qp.constraints().row(row).dot(&current.transpose());
    }

    let qr = pivoted_qr(&g_a.transpose(), RANK_TOL);
    if qr.rank == m1 {
        solve_full_rank(qp, &g_a, &r1, &r2)
    } else {
        solve_rank_deficient(qp, &qr, &r1, &r2, m1)
    }
}

/// Block elimination through the Hessian factor: with `y = phi^-1 r1` and
/// `W = phi^-1 g_a'`, the multipliers solve `(g_a W) lambda = g_a y - r2`
/// and the step is `y - W lambda`.
fn solve_full_rank(
    qp: &QPProblem,
    g_a: &DMatrix<f64>,
    r1: &DVector<f64>,
    r2: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), QpError> {
    let chol = qp.phi_cholesky();
    let y = chol.solve(r1);
    let w = chol.solve(&g_a.transpose());
    let mut schur = g_a * &w;
    let symmetrized = (&schur + schur.transpose()) * 0.5;
    schur = symmetrized;
    let rhs = g_a * &y - r2;
    let lambda = match schur.clone().cholesky() {
        Some(f) => f.solve(&rhs),
        None => schur.lu().solve(&rhs).ok_or(QpError::NotPositiveDefinite)?,
    };
    let delta = y - w * &lambda;
    Ok((delta, lambda))
}

/// Null-space resolution for linearly dependent working sets. The pivoted
/// factorization `g_a' P = Q R` splits the step into a particular solution
/// along the range of `g_a'` plus a component in its null space chosen to
/// minimize the objective. Multipliers of dependent rows are reported as
/// exactly zero.
fn solve_rank_deficient(
    qp: &QPProblem,
    qr: &crate::qr::PivotedQr,
    r1: &DVector<f64>,
    r2: &DVector<f64>,
    m1: usize,
) -> Result<(DVector<f64>, DVector<f64>), QpError> {
    let dim = qp.dim();
    let rank = qr.rank;
    let q1 = qr.q.columns(0, rank).into_owned();
    let q2 = qr.q.columns(rank, dim - rank).into_owned();
    let r_upper = qr.r.view((0, 0), (rank, rank)).into_owned();

    // Particular solution: forward substitution on r_upper' w = (P' r2).
    let mut w = DVector::zeros(rank);
    for i in 0..rank {
        let mut acc = r2[qr.perm[i]];
        for j in 0..i {
            acc -= r_upper[(j, i)] * w[j];
        }
        w[i] = acc / r_upper[(i, i)];
    }

    // Null-space component minimizing the quadratic.
    let delta = if dim > rank {
        let reduced = q2.transpose() * qp.phi() * &q2;
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        let rhs = q2.transpose() * (r1 - qp.phi() * &q1 * &w);
        let v = reduced
            .cholesky()
            .ok_or(QpError::NotPositiveDefinite)?
            .solve(&rhs);
        &q1 * &w + q2 * v
    } else {
        &q1 * &w
    };

    // Back substitution for the independent multipliers, zeros elsewhere.
    let residual = qr.q.transpose() * (r1 - qp.phi() * &delta);
    let mut mu = DVector::zeros(rank);
    for i in (0..rank).rev() {
        let mut acc = residual[i];
        for j in i + 1..rank {
            acc -= r_upper[(i, j)] * mu[j];
        }
        mu[i] = acc / r_upper[(i, i)];
    }
    let mut lambda = DVector::zeros(m1);
    for i in 0..rank {
        lambda[qr.perm[i]] = mu[i];
    }
    Ok((delta, lambda))
}

/// Largest fraction of `delta` that keeps every constraint outside the
/// working set satisfied, capped at one. Returns the clamped step length and
/// the lowest-index blocking row, if any.
pub fn step_length(
    qp: &QPProblem,
    working_set: &[usize],
    current: &DVector<f64>,
    delta: &DVector<f64>,
) -> (f64, Option<usize>) {
    let mut in_set = vec![false; qp.num_constraints()];
    for &row in working_set {
        in_set[row] = true;
    }
    let mut kappa = 1.0;
    let mut blocking = None;
    for i in 0..qp.num_constraints() {
        if in_set[i] {
            continue;
        }
        let row = qp.constraints().row(i);
        let advance = row.dot(&delta.transpose());
        if advance <= STEP_DENOMINATOR_TOL {
            continue;
        }
        let slack = qp.bounds()[i] - row.dot(&current.transpose());
        let limit = slack / advance;
        if limit < kappa {
            kappa = limit;
            blocking = Some(i);
        }
    }
    (kappa.max(0.0), blocking)
}
