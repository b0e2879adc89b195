use nalgebra::{DMatrix, DVector};

use crate::hyper::Hyperparameters;

/// Squared-exponential ARD covariance between two inputs.
///
/// `sf2 * exp(-1/2 * sum_d ((a_d - b_d) / l_d)^2)` — observation noise is not
/// part of the kernel; it enters only the Gram diagonal.
pub fn kernel_eval(a: &DVector<f64>, b: &DVector<f64>, h: &Hyperparameters) -> f64 {
    debug_assert_eq!(a.len(), h.input_dim());
    debug_assert_eq!(b.len(), h.input_dim());
    let inv_sq = h.squared_lengthscales().map(|v| 1.0 / v);
    let mut r = 0.0;
    for d in 0..a.len() {
        let diff = a[d] - b[d];
        r += diff * diff * inv_sq[d];
    }
    h.signal_variance() * (-0.5 * r).exp()
}

/// Noise-free Gram matrix of the rows of `inputs`.
pub(crate) fn gram(inputs: &DMatrix<f64>, h: &Hyperparameters) -> DMatrix<f64> {
    let d = inputs.nrows();
    let inv_sq = h.squared_lengthscales().map(|v| 1.0 / v);
    let sf2 = h.signal_variance();
    let mut k = DMatrix::zeros(d, d);
    for i in 0..d {
        k[(i, i)] = sf2;
        for j in 0..i {
            let mut r = 0.0;
            for c in 0..inputs.ncols() {
                let diff = inputs[(i, c)] - inputs[(j, c)];
                r += diff * diff * inv_sq[c];
            }
            let v = sf2 * (-0.5 * r).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Covariances `k(x_i, x)` between every training row and a test input.
pub(crate) fn cross_vector(
    inputs: &DMatrix<f64>,
    x: &DVector<f64>,
    h: &Hyperparameters,
) -> DVector<f64> {
    let d = inputs.nrows();
    let inv_sq = h.squared_lengthscales().map(|v| 1.0 / v);
    let sf2 = h.signal_variance();
    DVector::from_fn(d, |i, _| {
        let mut r = 0.0;
        for c in 0..inputs.ncols() {
            let diff = inputs[(i, c)] - x[c];
            r += diff * diff * inv_sq[c];
        }
        sf2 * (-0.5 * r).exp()
    })
}
