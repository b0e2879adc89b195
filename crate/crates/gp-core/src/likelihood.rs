use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dataset::Dataset;
use crate::error::GpError;
use crate::hyper::Hyperparameters;

/// Factorization of `K + sn2*I (+ jitter*I)`, recording how much jitter was
/// needed to make it positive definite.
pub(crate) struct JitteredCholesky {
    pub chol: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

/// Cholesky with an escalating jitter ladder: starts at `1e-10 * trace/D` and
/// grows tenfold up to `1e-4 * trace/D` before giving up.
pub(crate) fn cholesky_with_jitter(k_sigma: &DMatrix<f64>) -> Result<JitteredCholesky, GpError> {
    if let Some(chol) = Cholesky::new(k_sigma.clone()) {
        return Ok(JitteredCholesky { chol, jitter: 0.0 });
    }
    let base = k_sigma.trace() / k_sigma.nrows() as f64;
    let mut jitter = 1e-10 * base;
    let max_jitter = 1e-4 * base;
    while jitter <= max_jitter * (1.0 + 1e-12) {
        let mut k = k_sigma.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(k) {
            return Ok(JitteredCholesky { chol, jitter });
        }
        jitter *= 10.0;
    }
    Err(GpError::IllConditionedKernel { max_jitter })
}

/// Per-input-dimension matrices of pairwise squared differences
/// `(x_id - x_jd)^2`, reused across likelihood evaluations on one dataset.
pub(crate) struct PairwiseSqDiffs {
    per_dim: Vec<DMatrix<f64>>,
}

impl PairwiseSqDiffs {
    pub(crate) fn dim(&self, c: usize) -> &DMatrix<f64> {
        &self.per_dim[c]
    }
}

pub(crate) fn pairwise_sq_diffs(inputs: &DMatrix<f64>) -> PairwiseSqDiffs {
    let d = inputs.nrows();
    let per_dim = (0..inputs.ncols())
        .map(|c| {
            DMatrix::from_fn(d, d, |i, j| {
                let diff = inputs[(i, c)] - inputs[(j, c)];
                diff * diff
            })
        })
        .collect();
    PairwiseSqDiffs { per_dim }
}

/// Log marginal likelihood of the dataset under shared hyperparameters,
/// summed over output dimensions, with its gradient in log-hyperparameter
/// space (packed like [`Hyperparameters::to_log_vector`]).
pub fn log_marginal_likelihood(
    data: &Dataset,
    h: &Hyperparameters,
) -> Result<(f64, DVector<f64>), GpError> {
    if h.input_dim() != data.input_dim() {
        return Err(GpError::DimensionMismatch(format!(
            "hyperparameters accept {} inputs, dataset has {}",
            h.input_dim(),
            data.input_dim()
        )));
    }
    let cache = pairwise_sq_diffs(data.inputs());
    lml_with_cache(&cache, data, h)
}

pub(crate) fn lml_with_cache(
    cache: &PairwiseSqDiffs,
    data: &Dataset,
    h: &Hyperparameters,
) -> Result<(f64, DVector<f64>), GpError> {
    let d = data.len();
    let p = data.input_dim();
    let n_out = data.state_dim();
    let inv_sq = h.squared_lengthscales().map(|v| 1.0 / v);
    let sf2 = h.signal_variance();
    let sn2 = h.noise_variance();

    // Noise-free Gram; noise enters the diagonal only.
    let mut expo = DMatrix::zeros(d, d);
    for c in 0..p {
        expo += &cache.per_dim[c] * inv_sq[c];
    }
    let k = expo.map(|r| sf2 * (-0.5 * r).exp());
    let mut k_sigma = k.clone();
    for i in 0..d {
        k_sigma[(i, i)] += sn2;
    }
    let jc = cholesky_with_jitter(&k_sigma)?;

    let log_det: f64 = jc.chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let norm_const = d as f64 * (2.0 * std::f64::consts::PI).ln();

    let mut value = 0.0;
    // W = sum_d alpha_d alpha_d' - n_out * K_sigma^{-1}; every gradient term is
    // 1/2 tr(W dK/dtheta).
    let mut w = jc.chol.inverse() * -(n_out as f64);
    for dim in 0..n_out {
        let y = data.targets().column(dim).into_owned();
        let alpha = jc.chol.solve(&y);
        value += -0.5 * y.dot(&alpha) - 0.5 * log_det - 0.5 * norm_const;
        w.ger(1.0, &alpha, &alpha, 1.0);
    }
    if !value.is_finite() {
        return Err(GpError::NonFinite("log marginal likelihood"));
    }

    let mut grad = DVector::zeros(p + 2);
    for c in 0..p {
        // dK/d(log l_c) = K .* sq_c / l_c^2
        let mut acc = 0.0;
        let sq = &cache.per_dim[c];
        for j in 0..d {
            for i in 0..d {
                acc += w[(i, j)] * k[(i, j)] * sq[(i, j)];
            }
        }
        grad[c] = 0.5 * acc * inv_sq[c];
    }
    // dK/d(log sf2) = K (noise-free part scales with sf2).
    let mut acc = 0.0;
    for j in 0..d {
        for i in 0..d {
            acc += w[(i, j)] * k[(i, j)];
        }
    }
    grad[p] = 0.5 * acc;
    // dK/d(log sn2) = sn2 * I.
    grad[p + 1] = 0.5 * sn2 * w.trace();

    if !grad.iter().all(|v| v.is_finite()) {
        return Err(GpError::NonFinite("log marginal likelihood gradient"));
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_eval;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn hyp(ls: &[f64], sf2: f64, sn2: f64) -> Hyperparameters {
        Hyperparameters::new(DVector::from_row_slice(ls), sf2, sn2).unwrap()
    }

    fn dataset(inputs: DMatrix<f64>, targets: DMatrix<f64>) -> Dataset {
        let n = targets.ncols();
        Dataset::new(inputs, targets, n, None).unwrap()
    }

    #[test]
    fn single_zero_target_with_unit_gram() {
        // sf2 + sn2 = 1 makes K_sigma the 1x1 identity.
        let data = dataset(
            DMatrix::from_row_slice(1, 2, &[0.3, -1.0]),
            DMatrix::zeros(1, 1),
        );
        let h = hyp(&[1.0, 1.0], 0.6, 0.4);
        let (value, _) = log_marginal_likelihood(&data, &h).unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((value - expected).abs() < 1e-12);
    }

    #[test]
    fn matches_two_point_closed_form() {
        let inputs = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.2, 0.0]);
        let targets = DMatrix::from_row_slice(2, 1, &[0.4, -0.9]);
        let h = hyp(&[0.8, 1.0], 1.3, 0.2);
        let data = dataset(inputs.clone(), targets.clone());

        let k12 = kernel_eval(
            &inputs.row(0).transpose(),
            &inputs.row(1).transpose(),
            &h,
        );
        let a = 1.3 + 0.2;
        let det = a * a - k12 * k12;
        let (y1, y2) = (targets[(0, 0)], targets[(1, 0)]);
        let quad = (a * y1 * y1 - 2.0 * k12 * y1 * y2 + a * y2 * y2) / det;
        let expected = -0.5 * quad - 0.5 * det.ln() - (2.0 * std::f64::consts::PI).ln();

        let (value, _) = log_marginal_likelihood(&data, &h).unwrap();
        assert!((value - expected).abs() < 1e-10);
    }

    #[test]
    fn sums_over_output_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inputs = DMatrix::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0));
        let targets = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
        let data = dataset(inputs, targets);
        let h = hyp(&[0.7, 1.1, 0.9], 0.9, 0.05);
        let (total, _) = log_marginal_likelihood(&data, &h).unwrap();
        let per_dim: f64 = (0..2)
            .map(|d| log_marginal_likelihood(&data.select_target(d), &h).unwrap().0)
            .sum();
        assert!((total - per_dim).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for case in 0..20 {
            let d = rng.random_range(3..=8);
            let p = rng.random_range(1..=3usize);
            let n_out = rng.random_range(1..=2usize);
            let inputs = DMatrix::from_fn(d, p + 2, |_, _| rng.random_range(-2.0..2.0));
            let targets = DMatrix::from_fn(d, n_out, |_, _| rng.random_range(-1.5..1.5));
            let data = Dataset::new(inputs, targets, n_out, None).unwrap();

            let log0 = DVector::from_fn(p + 4, |_, _| rng.random_range(-0.7..0.7));
            let h = Hyperparameters::from_log_vector(&log0);
            let (_, grad) = log_marginal_likelihood(&data, &h).unwrap();

            let step = 1e-5;
            for c in 0..p + 4 {
                let mut plus = log0.clone();
                plus[c] += step;
                let mut minus = log0.clone();
                minus[c] -= step;
                let fp = log_marginal_likelihood(&data, &Hyperparameters::from_log_vector(&plus))
                    .unwrap()
                    .0;
                let fm = log_marginal_likelihood(&data, &Hyperparameters::from_log_vector(&minus))
                    .unwrap()
                    .0;
                let fd = (fp - fm) / (2.0 * step);
                let tol = 1e-4 * fd.abs().max(1.0);
                assert!(
                    (grad[c] - fd).abs() <= tol,
                    "case {case}, coord {c}: analytic {} vs fd {}",
                    grad[c],
                    fd
                );
            }
        }
    }

    #[test]
    fn jitter_ladder_recovers_degenerate_gram() {
        // Two identical inputs with negligible noise make K_sigma singular.
        let inputs = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.5, 0.0]);
        let targets = DMatrix::from_row_slice(2, 1, &[0.1, 0.1]);
        let data = dataset(inputs, targets);
        let h = hyp(&[1.0, 1.0], 1.0, 1e-300);
        let (value, _) = log_marginal_likelihood(&data, &h).unwrap();
        assert!(value.is_finite());
    }
}
