use gp_linearize::{ExtendedState, LocalModel};
use nalgebra::{DMatrix, DVector};
use qp_activeset::{QpError, QPProblem};

use crate::config::MPCConfig;
use crate::cost::{tighten_or_drop, INERT_BOUND};
use crate::error::MpcError;

/// Building blocks of the condensed horizon problem, kept around for
/// inspection and testing: stage-weight block diagonals, the mean-extraction
/// matrix, the unit lower-triangular accumulators, the stacked local-model
/// powers, and the stacked reference.
#[derive(Debug, Clone)]
pub struct CondensedMatrices {
    q_tilde: DMatrix<f64>,
    r_tilde: DMatrix<f64>,
    m_z: DMatrix<f64>,
    t_u: DMatrix<f64>,
    t_z: DMatrix<f64>,
    a_tilde: DMatrix<f64>,
    b_tilde: DMatrix<f64>,
    r_star: DVector<f64>,
}

impl CondensedMatrices {
    /// `H(n+n^2)` square block diagonal with stage blocks `[Q, diag(vec Q)]`.
    pub fn q_tilde(&self) -> &DMatrix<f64> {
        &self.q_tilde
    }

    /// `Hm` square block diagonal repeating `R`.
    pub fn r_tilde(&self) -> &DMatrix<f64> {
        &self.r_tilde
    }

    /// `H x H(n+n^2)` stage-summation pattern: ones over each mean block,
    /// twos over each square-root block.
    pub fn m_z(&self) -> &DMatrix<f64> {
        &self.m_z
    }

    /// Unit lower-triangular accumulator mapping control increments to
    /// absolute controls, `kron(L_H, I_m)`.
    pub fn t_u(&self) -> &DMatrix<f64> {
        &self.t_u
    }

    /// Unit lower-triangular accumulator over extended-state increments,
    /// `kron(L_H, I_{n+n^2})`.
    pub fn t_z(&self) -> &DMatrix<f64> {
        &self.t_z
    }

    /// Stacked powers `[A; A^2; ...; A^H]`.
    pub fn a_tilde(&self) -> &DMatrix<f64> {
        &self.a_tilde
    }

    /// Block-Toeplitz `A^{i-j} B` impulse-response stack.
    pub fn b_tilde(&self) -> &DMatrix<f64> {
        &self.b_tilde
    }

    /// Stacked reference with zero blocks in the square-root positions.
    pub fn r_star(&self) -> &DVector<f64> {
        &self.r_star
    }
}

/// A ready-to-solve condensed problem plus the context needed to interpret
/// it: the free response (predicted extended trajectory under zero control
/// increments) and which tightened state rows had to be dropped or clamped
/// to keep the zero increment feasible.
#[derive(Debug)]
pub struct CondensedQp {
    problem: QPProblem,
    matrices: CondensedMatrices,
    free_response: DVector<f64>,
    dropped_coordinates: Vec<(usize, usize)>,
    clamped_rows: usize,
}

impl CondensedQp {
    pub fn problem(&self) -> &QPProblem {
        &self.problem
    }

    pub fn matrices(&self) -> &CondensedMatrices {
        &self.matrices
    }

    /// Predicted stacked extended state for `delta_u = 0`.
    pub fn free_response(&self) -> &DVector<f64> {
        &self.free_response
    }

    /// `(stage, coordinate)` pairs whose tightened bounds crossed and were
    /// replaced by inert ones for this step.
    pub fn dropped_coordinates(&self) -> &[(usize, usize)] {
        &self.dropped_coordinates
    }

    /// Number of state rows whose right-hand side was clamped to zero
    /// because the free response already violated the tightened bound.
    pub fn clamped_rows(&self) -> usize {
        self.clamped_rows
    }
}

/// Assembles the condensed quadratic program around the local model in
/// control-increment form.
///
/// The predicted stacked state is `Z = S + T_z (A_tilde delta_s + B_tilde
/// delta_U)` with `S` repeating the current extended state, so the decision
/// variable is the stacked control increment and the free response (`delta_U
/// = 0`) holds the current state. The cost halves of the exact expansion are
/// kept: the stored objective is half the horizon cost, so minimizers are
/// unchanged and callers recover the cost by doubling.
///
/// Constraints stack the input accumulator over the state response,
/// two-sided. State bounds apply to the mean coordinates, tightened by two
/// predicted standard deviations per stage (from the free response's
/// square-root block); square-root coordinates get inert bounds. Rows whose
/// tightening crosses are dropped for the step; rows the free response
/// already violates are clamped so the zero increment stays feasible. Input
/// rows are never relaxed.
pub fn build_condensed(
    model: &LocalModel,
    s_k: &ExtendedState,
    delta_s: &DVector<f64>,
    u_prev: &DVector<f64>,
    refs: &[DVector<f64>],
    cfg: &MPCConfig,
) -> Result<CondensedQp, MpcError> {
    let n = cfg.state_dim();
    let ext = n + n * n;
    let m = cfg.control_dim();
    let h = cfg.horizon();
    validate_inputs(model, s_k, delta_s, u_prev, refs, cfg, n, ext, m)?;

    let matrices = assemble_matrices(model, refs, cfg, n, ext, m, h);
    let s_bar = stack_copies(s_k.as_vector(), h);
    let u_bar = stack_copies(u_prev, h);
    let free_response = &s_bar + matrices.t_z() * (matrices.a_tilde() * delta_s);

    // Half of the exact quadratic expansion of |Z - r*|^2_Q~ + |U|^2_R~.
    let tz_b = matrices.t_z() * matrices.b_tilde();
    let phi = tz_b.transpose() * matrices.q_tilde() * &tz_b
        + matrices.t_u().transpose() * matrices.r_tilde() * matrices.t_u();
    let phi = (&phi + phi.transpose()) * 0.5;
    let z_dev = &free_response - matrices.r_star();
    let psi = tz_b.transpose() * (matrices.q_tilde() * &z_dev)
        + matrices.t_u().transpose() * (matrices.r_tilde() * &u_bar);
    let constant = 0.5
        * ((z_dev.transpose() * matrices.q_tilde() * &z_dev)[(0, 0)]
            + (u_bar.transpose() * matrices.r_tilde() * &u_bar)[(0, 0)]);

    let (g, upper, lower, dropped, clamped) =
        assemble_constraints(&matrices, &tz_b, &free_response, &u_bar, cfg, n, ext, m, h)?;

    // Two-sided box G delta_U within [lower, upper] as stacked one-sided rows.
    let rows = g.nrows();
    let mut g_full = DMatrix::zeros(2 * rows, h * m);
    g_full.view_mut((0, 0), (rows, h * m)).copy_from(&g);
    g_full.view_mut((rows, 0), (rows, h * m)).copy_from(&(-&g));
    let mut rhs = DVector::zeros(2 * rows);
    rhs.rows_mut(0, rows).copy_from(&upper);
    rhs.rows_mut(rows, rows).copy_from(&(-lower));

    let problem = match QPProblem::new(phi, psi, g_full, rhs, constant) {
        Ok(p) => p,
        Err(QpError::NotPositiveDefinite) => return Err(MpcError::NotStrictlyConvex),
        Err(e) => return Err(e.into()),
    };
    Ok(CondensedQp {
        problem,
        matrices,
        free_response,
        dropped_coordinates: dropped,
        clamped_rows: clamped,
    })
}

#[allow(clippy::too_many_arguments)]
fn validate_inputs(
    model: &LocalModel,
    s_k: &ExtendedState,
    delta_s: &DVector<f64>,
    u_prev: &DVector<f64>,
    refs: &[DVector<f64>],
    cfg: &MPCConfig,
    n: usize,
    ext: usize,
    m: usize,
) -> Result<(), MpcError> {
    if s_k.state_dim() != n {
        return Err(MpcError::Dimension(format!(
            "extended state is over {} coordinates, config expects {n}",
            s_k.state_dim()
        )));
    }
    if model.a().nrows() != ext || model.b().ncols() != m {
        return Err(MpcError::Dimension(format!(
            "local model is {}x{} / {}x{}, config expects {ext}x{ext} / {ext}x{m}",
            model.a().nrows(),
            model.a().ncols(),
            model.b().nrows(),
            model.b().ncols()
        )));
    }
    if delta_s.len() != ext {
        return Err(MpcError::Dimension(format!(
            "state increment has {} entries, expected {ext}",
            delta_s.len()
        )));
    }
    if u_prev.len() != m {
        return Err(MpcError::Dimension(format!(
            "previous control has {} entries, expected {m}",
            u_prev.len()
        )));
    }
    if refs.len() != cfg.horizon() {
        return Err(MpcError::Dimension(format!(
            "got {} reference vectors for a horizon of {}",
            refs.len(),
            cfg.horizon()
        )));
    }
    if let Some(r) = refs.iter().find(|r| r.len() != n) {
        return Err(MpcError::Dimension(format!(
            "reference has {} coordinates, expected {n}",
            r.len()
        )));
    }
    Ok(())
}

fn assemble_matrices(
    model: &LocalModel,
    refs: &[DVector<f64>],
    cfg: &MPCConfig,
    n: usize,
    ext: usize,
    m: usize,
    h: usize,
) -> CondensedMatrices {
    // A^1..A^H.
    let mut powers = Vec::with_capacity(h);
    powers.push(model.a().clone());
    for i in 1..h {
        let next = model.a() * &powers[i - 1];
        powers.push(next);
    }

    let mut a_tilde = DMatrix::zeros(h * ext, ext);
    for (i, p) in powers.iter().enumerate() {
        a_tilde.view_mut((i * ext, 0), (ext, ext)).copy_from(p);
    }

    let mut b_tilde = DMatrix::zeros(h * ext, h * m);
    for i in 0..h {
        for j in 0..=i {
            if i == j {
                b_tilde.view_mut((i * ext, j * m), (ext, m)).copy_from(model.b());
            } else {
                let block = &powers[i - j - 1] * model.b();
                b_tilde.view_mut((i * ext, j * m), (ext, m)).copy_from(&block);
            }
        }
    }

    let accumulate = DMatrix::from_fn(h, h, |i, j| if j <= i { 1.0 } else { 0.0 });
    let t_u = accumulate.kronecker(&DMatrix::identity(m, m));
    let t_z = accumulate.kronecker(&DMatrix::identity(ext, ext));

    let mut q_tilde = DMatrix::zeros(h * ext, h * ext);
    let mut r_tilde = DMatrix::zeros(h * m, h * m);
    let mut m_z = DMatrix::zeros(h, h * ext);
    let mut r_star = DVector::zeros(h * ext);
    for i in 0..h {
        let off = i * ext;
        q_tilde.view_mut((off, off), (n, n)).copy_from(cfg.q());
        for col in 0..n {
            for row in 0..n {
                // Column-major vec(Q) along the square-root block diagonal.
                let at = off + n + row + col * n;
                q_tilde[(at, at)] = cfg.q()[(row, col)];
            }
        }
        r_tilde
            .view_mut((i * m, i * m), (m, m))
            .copy_from(cfg.r());
        for c in 0..n {
            m_z[(i, off + c)] = 1.0;
        }
        for c in 0..n * n {
            m_z[(i, off + n + c)] = 2.0;
        }
        r_star.rows_mut(off, n).copy_from(&refs[i]);
    }

    CondensedMatrices { q_tilde, r_tilde, m_z, t_u, t_z, a_tilde, b_tilde, r_star }
}

#[allow(clippy::too_many_arguments)]
fn assemble_constraints(
    matrices: &CondensedMatrices,
    tz_b: &DMatrix<f64>,
    free_response: &DVector<f64>,
    u_bar: &DVector<f64>,
    cfg: &MPCConfig,
    n: usize,
    ext: usize,
    m: usize,
    h: usize,
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>, Vec<(usize, usize)>, usize), MpcError>
{
    let rows = h * m + h * ext;
    let mut g = DMatrix::zeros(rows, h * m);
    g.view_mut((0, 0), (h * m, h * m)).copy_from(matrices.t_u());
    g.view_mut((h * m, 0), (h * ext, h * m)).copy_from(tz_b);

    let mut upper = DVector::zeros(rows);
    let mut lower = DVector::zeros(rows);

    // Input rows: absolute bounds on u_prev plus accumulated increments.
    for i in 0..h {
        for c in 0..m {
            let at = i * m + c;
            upper[at] = cfg.input_bounds().upper()[c] - u_bar[at];
            lower[at] = cfg.input_bounds().lower()[c] - u_bar[at];
            if upper[at] < 0.0 || lower[at] > 0.0 {
                return Err(MpcError::Internal(format!(
                    "previous control outside the input bounds in coordinate {c}"
                )));
            }
        }
    }

    let mut dropped = Vec::new();
    let mut clamped = 0usize;
    for i in 0..h {
        let block = free_response.rows(i * ext, ext);
        // Predicted covariance for this stage from the square-root block of
        // the free response; kept positive semidefinite by construction.
        let root = DMatrix::from_column_slice(n, n, &block.as_slice()[n..]);
        let sigma = &root * root.transpose();
        let (tight_lower, tight_upper, crossed) =
            tighten_or_drop(cfg.state_bounds(), &sigma, cfg.confidence())?;
        for &c in &crossed {
            dropped.push((i, c));
        }
        for c in 0..n {
            let at = h * m + i * ext + c;
            if crossed.contains(&c) {
                upper[at] = INERT_BOUND;
                lower[at] = -INERT_BOUND;
                continue;
            }
            let mut hi = tight_upper[c] - block[c];
            let mut lo = tight_lower[c] - block[c];
            // Keep delta_U = 0 feasible when the free response already
            // violates a tightened state bound.
            if hi < 0.0 {
                hi = 0.0;
                clamped += 1;
            }
            if lo > 0.0 {
                lo = 0.0;
                clamped += 1;
            }
            upper[at] = hi;
            lower[at] = lo;
        }
        for c in n..ext {
            let at = h * m + i * ext + c;
            upper[at] = INERT_BOUND;
            lower[at] = -INERT_BOUND;
        }
    }

    Ok((g, upper, lower, dropped, clamped))
}

fn stack_copies(v: &DVector<f64>, count: usize) -> DVector<f64> {
    let mut out = DVector::zeros(v.len() * count);
    for i in 0..count {
        out.rows_mut(i * v.len(), v.len()).copy_from(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Bounds;

    fn wide_bounds(dim: usize) -> Bounds {
        Bounds::new(
            DVector::from_element(dim, -1e9),
            DVector::from_element(dim, 1e9),
        )
        .unwrap()
    }

    fn config(n: usize, m: usize, h: usize) -> MPCConfig {
        MPCConfig::new(
            h,
            DMatrix::identity(n, n),
            DMatrix::identity(m, m) * 0.5,
            wide_bounds(n),
            wide_bounds(m),
        )
        .unwrap()
    }

    fn zero_state(n: usize) -> ExtendedState {
        ExtendedState::from_vector(DVector::zeros(n + n * n), n).unwrap()
    }

    fn model(n: usize, m: usize, a: DMatrix<f64>, b: DMatrix<f64>) -> LocalModel {
        LocalModel::new(a, b, zero_state(n), DVector::zeros(m)).unwrap()
    }

    #[test]
    fn accumulators_have_the_kronecker_structure() {
        let cfg = config(1, 2, 3);
        let ext = 2;
        let m = model(1, 2, DMatrix::zeros(ext, ext), DMatrix::zeros(ext, 2));
        let refs = vec![DVector::zeros(1); 3];
        let qp = build_condensed(
            &m,
            &zero_state(1),
            &DVector::zeros(ext),
            &DVector::zeros(2),
            &refs,
            &cfg,
        )
        .unwrap();
        let t_u = qp.matrices().t_u();
        assert_eq!(t_u.nrows(), 6);
        for i in 0..3 {
            for j in 0..3 {
                let block = t_u.view((2 * i, 2 * j), (2, 2)).into_owned();
                let expected = if j <= i {
                    DMatrix::identity(2, 2)
                } else {
                    DMatrix::zeros(2, 2)
                };
                assert_eq!(block, expected);
            }
        }
        assert_eq!(qp.matrices().t_z().nrows(), 3 * ext);
    }

    #[test]
    fn stage_weights_embed_q_and_its_vectorization() {
        let n = 2;
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let cfg = MPCConfig::new(
            2,
            q.clone(),
            DMatrix::identity(1, 1),
            wide_bounds(2),
            wide_bounds(1),
        )
        .unwrap();
        let ext = n + n * n;
        let m = model(n, 1, DMatrix::zeros(ext, ext), DMatrix::zeros(ext, 1));
        let refs = vec![DVector::zeros(n); 2];
        let qp = build_condensed(
            &m,
            &zero_state(n),
            &DVector::zeros(ext),
            &DVector::zeros(1),
            &refs,
            &cfg,
        )
        .unwrap();
        let qt = qp.matrices().q_tilde();
        assert_eq!(qt.nrows(), 2 * ext);
        assert_eq!(qt.view((0, 0), (n, n)).into_owned(), q);
        // Square-root block carries vec(Q) on the diagonal, column-major.
        assert_eq!(qt[(n, n)], 2.0);
        assert_eq!(qt[(n + 1, n + 1)], 0.5);
        assert_eq!(qt[(n + 2, n + 2)], 0.5);
        assert_eq!(qt[(n + 3, n + 3)], 1.0);
        // Off-diagonal couplings stay zero in the square-root block.
        assert_eq!(qt[(n, n + 1)], 0.0);
        // Second stage repeats the first.
        assert_eq!(
            qt.view((ext, ext), (ext, ext)).into_owned(),
            qt.view((0, 0), (ext, ext)).into_owned()
        );
    }

    #[test]
    fn extraction_matrix_weights_means_once_and_roots_twice() {
        let cfg = config(2, 1, 2);
        let ext = 6;
        let m = model(2, 1, DMatrix::zeros(ext, ext), DMatrix::zeros(ext, 1));
        let refs = vec![DVector::zeros(2); 2];
        let qp = build_condensed(
            &m,
            &zero_state(2),
            &DVector::zeros(ext),
            &DVector::zeros(1),
            &refs,
            &cfg,
        )
        .unwrap();
        let m_z = qp.matrices().m_z();
        assert_eq!(m_z.nrows(), 2);
        assert_eq!(m_z.ncols(), 2 * ext);
        for c in 0..2 {
            assert_eq!(m_z[(0, c)], 1.0);
        }
        for c in 2..ext {
            assert_eq!(m_z[(0, c)], 2.0);
        }
        for c in 0..ext {
            assert_eq!(m_z[(1, c)], 0.0);
        }
        assert_eq!(m_z[(1, ext)], 1.0);
    }

    #[test]
    fn reference_stack_zeroes_the_root_positions() {
        let cfg = config(2, 1, 2);
        let ext = 6;
        let m = model(2, 1, DMatrix::zeros(ext, ext), DMatrix::zeros(ext, 1));
        let refs = vec![
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![3.0, 4.0]),
        ];
        let qp = build_condensed(
            &m,
            &zero_state(2),
            &DVector::zeros(ext),
            &DVector::zeros(1),
            &refs,
            &cfg,
        )
        .unwrap();
        let r_star = qp.matrices().r_star();
        assert_eq!(r_star[0], 1.0);
        assert_eq!(r_star[1], 2.0);
        assert!(r_star.rows(2, 4).iter().all(|&v| v == 0.0));
        assert_eq!(r_star[ext], 3.0);
        assert_eq!(r_star[ext + 1], 4.0);
    }

    #[test]
    fn state_rows_tighten_by_the_predicted_deviation() {
        // One state coordinate; the square-root tail of the free response is
        // driven by the increment through A's lower row.
        let n = 1;
        let ext = 2;
        let a = DMatrix::from_row_slice(ext, ext, &[0.0, 0.0, 1.0, 0.0]);
        let b = DMatrix::from_row_slice(ext, 1, &[1.0, 0.0]);
        let cfg = MPCConfig::new(
            1,
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            Bounds::new(DVector::from_element(1, -1.0), DVector::from_element(1, 1.0))
                .unwrap(),
            wide_bounds(1),
        )
        .unwrap();
        let m = model(n, 1, a, b);
        let delta_s = DVector::from_vec(vec![0.4, 0.0]);
        let qp = build_condensed(
            &m,
            &zero_state(n),
            &delta_s,
            &DVector::zeros(1),
            &[DVector::zeros(1)],
            &cfg,
        )
        .unwrap();
        // Free response: mean 0, root 0.4 -> sigma 0.16, margin 0.8.
        assert_eq!(qp.free_response()[1], 0.4);
        let bounds = qp.problem().bounds();
        // Rows: [input, state mean, state root] then the negated copies.
        assert!((bounds[1] - 0.2).abs() < 1e-12); // 1 - 0.8 - 0
        assert_eq!(bounds[2], INERT_BOUND);
        assert!((bounds[4] - 0.2).abs() < 1e-12); // -(-1 + 0.8)
        assert!(qp.dropped_coordinates().is_empty());
        assert_eq!(qp.clamped_rows(), 0);
    }

    #[test]
    fn crossing_tightening_drops_the_row() {
        let n = 1;
        let ext = 2;
        let a = DMatrix::from_row_slice(ext, ext, &[0.0, 0.0, 1.0, 0.0]);
        let b = DMatrix::from_row_slice(ext, 1, &[1.0, 0.0]);
        let cfg = MPCConfig::new(
            1,
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            Bounds::new(DVector::from_element(1, -0.5), DVector::from_element(1, 0.5))
                .unwrap(),
            wide_bounds(1),
        )
        .unwrap();
        let m = model(n, 1, a, b);
        let delta_s = DVector::from_vec(vec![0.4, 0.0]); // margin 0.8 > gap 1.0/2
        let qp = build_condensed(
            &m,
            &zero_state(n),
            &delta_s,
            &DVector::zeros(1),
            &[DVector::zeros(1)],
            &cfg,
        )
        .unwrap();
        assert_eq!(qp.dropped_coordinates(), &[(0, 0)]);
        assert_eq!(qp.problem().bounds()[1], INERT_BOUND);
        assert_eq!(qp.problem().bounds()[4], INERT_BOUND);
    }

    #[test]
    fn violated_free_response_rows_are_clamped_to_keep_zero_feasible() {
        let n = 1;
        let ext = 2;
        let cfg = MPCConfig::new(
            1,
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            Bounds::new(DVector::from_element(1, -1.0), DVector::from_element(1, 1.0))
                .unwrap(),
            wide_bounds(1),
        )
        .unwrap();
        let m = model(n, 1, DMatrix::zeros(ext, ext), DMatrix::identity(ext, 1));
        // Operating mean sits outside the state box entirely.
        let s = ExtendedState::from_vector(DVector::from_vec(vec![5.0, 0.0]), 1).unwrap();
        let qp = build_condensed(
            &m,
            &s,
            &DVector::zeros(ext),
            &DVector::zeros(1),
            &[DVector::zeros(1)],
            &cfg,
        )
        .unwrap();
        assert_eq!(qp.clamped_rows(), 1);
        assert_eq!(qp.problem().bounds()[1], 0.0); // upper row clamped
        let zero = DVector::zeros(1);
        assert!(qp.problem().max_violation(&zero) <= 0.0);
    }
}
