use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::GpError;
use crate::kernel;
use crate::state::{GaussianState, UncertainInput};
use crate::train::TrainedGP;

/// One-step difference prediction at a deterministic input: per-dimension
/// mean `k*' alpha` and noise-free latent variance `sf2 - k*' K_sigma^{-1} k*`.
pub fn predict_point(
    gp: &TrainedGP,
    x: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), GpError> {
    if x.len() != gp.input_dim() {
        return Err(GpError::DimensionMismatch(format!(
            "input has {} entries, model expects {}",
            x.len(),
            gp.input_dim()
        )));
    }
    let n = gp.state_dim();
    let mut mean = DVector::zeros(n);
    let mut var = DVector::zeros(n);
    for dim in 0..n {
        let h = &gp.hyperparameters()[dim];
        let kx = kernel::cross_vector(gp.dataset().inputs(), x, h);
        mean[dim] = kx.dot(gp.alpha(dim));
        let v = h.signal_variance() - kx.dot(&gp.chol(dim).solve(&kx));
        var[dim] = clamp_variance(v, h.signal_variance())?;
    }
    Ok((mean, var))
}

fn clamp_variance(v: f64, scale: f64) -> Result<f64, GpError> {
    if v < -1e-10 * scale.max(1.0) {
        return Err(GpError::NegativeVariance { value: v });
    }
    Ok(v.max(0.0))
}

/// Moment-matched prediction at a Gaussian input.
#[derive(Clone, Debug)]
pub struct UncertainPrediction {
    /// E[delta_x].
    pub mean: DVector<f64>,
    /// Cov[delta_x]: variance of the posterior mean plus the expected
    /// conditional variance on the diagonal.
    pub cov: DMatrix<f64>,
    /// Cov[x_k, delta_x]: state rows by output columns.
    pub input_output_cov: DMatrix<f64>,
    /// The expected-conditional-variance share of `cov`'s diagonal, exposed so
    /// callers can inspect the (PSD) variance-of-mean part separately.
    pub expected_var: DVector<f64>,
}

/// Exact moment matching of the SE-ARD posterior over a Gaussian input.
///
/// With a zero input covariance this reduces (exactly, by the same formulas)
/// to [`predict_point`]; that case short-circuits.
pub fn predict_uncertain(
    gp: &TrainedGP,
    input: &UncertainInput,
) -> Result<UncertainPrediction, GpError> {
    let p = gp.input_dim();
    let n = gp.state_dim();
    if input.dim() != p || input.state_dim() != n {
        return Err(GpError::DimensionMismatch(format!(
            "uncertain input is {}-dimensional with state {}, model expects {}/{}",
            input.dim(),
            input.state_dim(),
            p,
            n
        )));
    }
    if input.cov().iter().all(|&v| v == 0.0) {
        let (mean, var) = predict_point(gp, input.mean())?;
        return Ok(UncertainPrediction {
            mean,
            cov: DMatrix::from_diagonal(&var),
            input_output_cov: DMatrix::zeros(n, n),
            expected_var: var,
        });
    }

    let mu = input.mean();
    let sig = input.cov();
    let rows = gp.dataset().len();
    let x = gp.dataset().inputs();
    let nu = DMatrix::from_fn(rows, p, |i, c| x[(i, c)] - mu[c]);

    let mut mean = DVector::zeros(n);
    let mut io_cov = DMatrix::zeros(n, n);
    // Per-dimension expectation weights q_a,i = E[k_a(x_i, x*)].
    let mut q_all: Vec<DVector<f64>> = Vec::with_capacity(n);
    for dim in 0..n {
        let h = &gp.hyperparameters()[dim];
        let lam = h.squared_lengthscales();
        let mut a_mat = sig.clone();
        for c in 0..p {
            a_mat[(c, c)] += lam[c];
        }
        let chol = Cholesky::new(a_mat).ok_or_else(|| {
            GpError::DegenerateInput(format!("input covariance plus lengthscales, dim {dim}"))
        })?;
        let logdet_a: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let logdet_lam: f64 = lam.iter().map(|v| v.ln()).sum();
        let detfac = (0.5 * (logdet_lam - logdet_a)).exp();

        let sol = chol.solve(&nu.transpose()); // p x D, columns A^{-1} nu_i
        let q = DVector::from_fn(rows, |i, _| {
            let mut quad = 0.0;
            for c in 0..p {
                quad += nu[(i, c)] * sol[(c, i)];
            }
            h.signal_variance() * detfac * (-0.5 * quad).exp()
        });
        mean[dim] = q.dot(gp.alpha(dim));

        // Cov[x*, delta_a] = Sigma A^{-1} sum_i beta_i q_i nu_i.
        let weights = DVector::from_fn(rows, |i, _| gp.alpha(dim)[i] * q[i]);
        let full = sig * (&sol * weights);
        for r in 0..n {
            io_cov[(r, dim)] = full[r];
        }
        q_all.push(q);
    }

    let mut cov = DMatrix::zeros(n, n);
    let mut expected_var = DVector::zeros(n);
    for a in 0..n {
        let ha = &gp.hyperparameters()[a];
        let lam_a = ha.squared_lengthscales();
        for b in a..n {
            let hb = &gp.hyperparameters()[b];
            let lam_b = hb.squared_lengthscales();
            // P^{-1} = (Lambda_a^{-1} + Lambda_b^{-1})^{-1} is diagonal.
            let pinv = DVector::from_fn(p, |c, _| lam_a[c] * lam_b[c] / (lam_a[c] + lam_b[c]));
            let w_a = DVector::from_fn(p, |c, _| lam_b[c] / (lam_a[c] + lam_b[c]));
            let w_b = DVector::from_fn(p, |c, _| lam_a[c] / (lam_a[c] + lam_b[c]));
            let mut t_mat = sig.clone();
            for c in 0..p {
                t_mat[(c, c)] += pinv[c];
            }
            let chol = Cholesky::new(t_mat).ok_or_else(|| {
                GpError::DegenerateInput(format!("pair covariance, dims {a}/{b}"))
            })?;
            let logdet_t: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
            let logdet_pinv: f64 = pinv.iter().map(|v| v.ln()).sum();
            let detfac = (0.5 * (logdet_pinv - logdet_t)).exp();
            let t_inv = chol.inverse();

            let va = scale_cols(&nu, &w_a);
            let vb = scale_cols(&nu, &w_b);
            let tva = &va * &t_inv; // D x p
            let tvb = &vb * &t_inv;
            let g_a = DVector::from_fn(rows, |i, _| tva.row(i).dot(&va.row(i)));
            let g_b = DVector::from_fn(rows, |i, _| tvb.row(i).dot(&vb.row(i)));
            let cross = &tva * vb.transpose(); // D x D

            // Q_ij = sf2_a sf2_b detfac dist_ij exp(-g_a_i/2 - g_b_j/2 - cross_ij);
            // Cauchy-Schwarz keeps the exponent nonpositive, so no overflow.
            let dist = gp.pair_distance(a, b);
            let kf = ha.signal_variance() * hb.signal_variance() * detfac;
            let beta_a = gp.alpha(a);
            let beta_b = gp.alpha(b);
            let kinv_a = gp.kinv(a);
            let mut weighted = 0.0;
            let mut traced = 0.0;
            for j in 0..rows {
                for i in 0..rows {
                    let q_ij =
                        dist[(i, j)] * (-0.5 * g_a[i] - 0.5 * g_b[j] - cross[(i, j)]).exp();
                    weighted += beta_a[i] * q_ij * beta_b[j];
                    if a == b {
                        traced += kinv_a[(i, j)] * q_ij;
                    }
                }
            }
            let second_moment = kf * weighted;
            let mut cab = second_moment - mean[a] * mean[b];
            if a == b {
                let evar =
                    clamp_variance(ha.signal_variance() - kf * traced, ha.signal_variance())?;
                expected_var[a] = evar;
                cab += evar;
            }
            cov[(a, b)] = cab;
            cov[(b, a)] = cab;
        }
    }

    Ok(UncertainPrediction {
        mean,
        cov,
        input_output_cov: io_cov,
        expected_var,
    })
}

fn scale_cols(m: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for c in 0..m.ncols() {
        out.column_mut(c).scale_mut(w[c]);
    }
    out
}

/// One-step belief propagation through the learned difference model:
/// `mu_{k+1} = mu_k + E[delta]` and
/// `Sigma_{k+1} = Sigma_k + Cov[delta] + Cov[x,delta] + Cov[delta,x]`.
pub fn propagate(
    gp: &TrainedGP,
    state: &GaussianState,
    control: &DVector<f64>,
) -> Result<GaussianState, GpError> {
    if state.dim() != gp.state_dim() || control.len() != gp.control_dim() {
        return Err(GpError::DimensionMismatch(format!(
            "state {} / control {} vs model {} / {}",
            state.dim(),
            control.len(),
            gp.state_dim(),
            gp.control_dim()
        )));
    }
    let input = UncertainInput::from_state_control(state, control);
    let pred = predict_uncertain(gp, &input)?;
    let mean = state.mean() + &pred.mean;
    let cov =
        state.cov() + &pred.cov + &pred.input_output_cov + pred.input_output_cov.transpose();
    GaussianState::new(mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::hyper::Hyperparameters;
    use crate::train::TrainedGP;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn toy_gp(noise: f64) -> TrainedGP {
        // Five well-separated 1-D states with one control column.
        let inputs = DMatrix::from_row_slice(
            5,
            2,
            &[-2.0, 0.0, -1.0, 0.1, 0.0, -0.1, 1.0, 0.2, 2.0, 0.0],
        );
        let targets = DMatrix::from_column_slice(
            5,
            1,
            &[0.9, 0.2, -0.3, 0.4, -0.8],
        );
        let data = Dataset::new(inputs, targets, 1, None).unwrap();
        let h = Hyperparameters::new(DVector::from_vec(vec![0.8, 0.5]), 1.0, noise).unwrap();
        TrainedGP::from_hyperparameters(data, vec![h], vec![]).unwrap()
    }

    #[test]
    fn near_interpolates_training_points_at_tiny_noise() {
        let gp = toy_gp(1e-12);
        for i in 0..gp.dataset().len() {
            let x = gp.dataset().input_row(i);
            let (mean, var) = predict_point(&gp, &x).unwrap();
            let target = gp.dataset().targets()[(i, 0)];
            assert!(
                (mean[0] - target).abs() <= 1e-6,
                "row {i}: {} vs {}",
                mean[0],
                target
            );
            assert!(var[0] >= 0.0 && var[0] <= 1e-6);
        }
    }

    #[test]
    fn reverts_to_prior_far_from_data() {
        let gp = toy_gp(1e-4);
        let x = DVector::from_vec(vec![1e6, 0.0]);
        let (mean, var) = predict_point(&gp, &x).unwrap();
        assert!(mean[0].abs() <= 1e-12);
        assert!((var[0] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn matches_two_point_closed_form() {
        let inputs = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let targets = DMatrix::from_column_slice(2, 1, &[0.5, -0.25]);
        let data = Dataset::new(inputs.clone(), targets.clone(), 1, None).unwrap();
        let h = Hyperparameters::new(DVector::from_vec(vec![0.7, 1.0]), 1.2, 0.05).unwrap();
        let gp = TrainedGP::from_hyperparameters(data, vec![h.clone()], vec![]).unwrap();

        let x = DVector::from_vec(vec![0.4, 0.0]);
        let k1 = kernel::kernel_eval(&inputs.row(0).transpose(), &x, &h);
        let k2 = kernel::kernel_eval(&inputs.row(1).transpose(), &x, &h);
        let k12 = kernel::kernel_eval(&inputs.row(0).transpose(), &inputs.row(1).transpose(), &h);
        let a = 1.2 + 0.05;
        let det = a * a - k12 * k12;
        // Explicit 2x2 inverse applied to y and to k*.
        let inv = |u: f64, v: f64| ((a * u - k12 * v) / det, (a * v - k12 * u) / det);
        let (ay1, ay2) = inv(targets[(0, 0)], targets[(1, 0)]);
        let expected_mean = k1 * ay1 + k2 * ay2;
        let (ik1, ik2) = inv(k1, k2);
        let expected_var = 1.2 - (k1 * ik1 + k2 * ik2);

        let (mean, var) = predict_point(&gp, &x).unwrap();
        assert!((mean[0] - expected_mean).abs() < 1e-10);
        assert!((var[0] - expected_var).abs() < 1e-10);
    }

    #[test]
    fn zero_input_covariance_reduces_to_point_prediction() {
        let gp = toy_gp(1e-3);
        let state = GaussianState::deterministic(DVector::from_vec(vec![0.3]));
        let input = UncertainInput::from_state_control(&state, &DVector::from_vec(vec![0.05]));
        let pred = predict_uncertain(&gp, &input).unwrap();
        let (mean, var) = predict_point(&gp, input.mean()).unwrap();
        assert!((pred.mean[0] - mean[0]).abs() <= 1e-12);
        assert!((pred.cov[(0, 0)] - var[0]).abs() <= 1e-12);
        assert_eq!(pred.input_output_cov[(0, 0)], 0.0);
    }

    #[test]
    fn variance_of_mean_part_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let gp = random_gp(&mut rng, 2, 1, 8);
            let state = random_state(&mut rng, 2);
            let input =
                UncertainInput::from_state_control(&state, &DVector::from_vec(vec![rng.random_range(-0.5..0.5)]));
            let pred = predict_uncertain(&gp, &input).unwrap();
            let vom = &pred.cov - DMatrix::from_diagonal(&pred.expected_var);
            let eig = vom.symmetric_eigen();
            assert!(
                eig.eigenvalues.iter().all(|&v| v >= -1e-9),
                "variance-of-mean eigenvalues {:?}",
                eig.eigenvalues
            );
        }
    }

    #[test]
    fn propagate_with_zero_covariance_matches_point_update() {
        let gp = toy_gp(1e-3);
        let state = GaussianState::deterministic(DVector::from_vec(vec![-0.4]));
        let control = DVector::from_vec(vec![0.1]);
        let next = propagate(&gp, &state, &control).unwrap();
        let input = UncertainInput::from_state_control(&state, &control);
        let (dmean, dvar) = predict_point(&gp, input.mean()).unwrap();
        assert!((next.mean()[0] - (-0.4 + dmean[0])).abs() <= 1e-12);
        assert!((next.cov()[(0, 0)] - dvar[0]).abs() <= 1e-12);
    }

    #[test]
    fn propagated_covariance_stays_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let gp = random_gp(&mut rng, 2, 1, 6);
            let state = random_state(&mut rng, 2);
            let control = DVector::from_vec(vec![rng.random_range(-0.5..0.5)]);
            let next = propagate(&gp, &state, &control).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(next.cov()[(i, j)], next.cov()[(j, i)]);
                }
            }
        }
    }

    pub(crate) fn random_gp(rng: &mut ChaCha8Rng, n: usize, m: usize, rows: usize) -> TrainedGP {
        let inputs = DMatrix::from_fn(rows, n + m, |_, _| rng.random_range(-2.0..2.0));
        let targets = DMatrix::from_fn(rows, n, |_, _| rng.random_range(-1.0..1.0));
        let data = Dataset::new(inputs, targets, n, None).unwrap();
        let hypers = (0..n)
            .map(|_| {
                Hyperparameters::new(
                    DVector::from_fn(n + m, |_, _| rng.random_range(0.5..2.0)),
                    rng.random_range(0.3..1.5),
                    rng.random_range(0.01..0.1),
                )
                .unwrap()
            })
            .collect();
        TrainedGP::from_hyperparameters(data, hypers, vec![]).unwrap()
    }

    pub(crate) fn random_state(rng: &mut ChaCha8Rng, n: usize) -> GaussianState {
        let mean = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let root = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.3..0.3));
        let cov = &root * root.transpose();
        GaussianState::new(mean, cov).unwrap()
    }
}
