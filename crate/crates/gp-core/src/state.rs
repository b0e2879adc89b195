use nalgebra::{DMatrix, DVector};

use crate::error::GpError;

/// Eigenvalues above this (negative) floor are treated as zero; anything
/// further below means the matrix is genuinely indefinite.
pub const PSD_CLAMP_TOL: f64 = -1e-10;

/// A Gaussian belief over the system state.
///
/// Construction symmetrizes the covariance and clamps eigenvalues in the
/// numerical-noise band `[PSD_CLAMP_TOL, 0)` to zero, so a stored covariance is
/// always symmetric positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, GpError> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(GpError::DimensionMismatch(format!(
                "mean has {n} entries but covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if !mean.iter().all(|v| v.is_finite()) || !cov.iter().all(|v| v.is_finite()) {
            return Err(GpError::NonFinite("GaussianState"));
        }
        let cov = clamp_psd(&cov)?;
        Ok(Self { mean, cov })
    }

    /// A belief with zero covariance, e.g. a direct measurement.
    pub fn deterministic(mean: DVector<f64>) -> Self {
        let n = mean.len();
        Self {
            mean,
            cov: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }
}

/// Symmetrizes `m` and clamps tiny negative eigenvalues to zero.
///
/// Fails with [`GpError::IndefiniteCovariance`] if any eigenvalue lies below
/// [`PSD_CLAMP_TOL`].
pub fn clamp_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, GpError> {
    let sym = (m + m.transpose()) * 0.5;
    if sym.iter().all(|&v| v == 0.0) {
        return Ok(sym);
    }
    let eig = sym.clone().symmetric_eigen();
    let mut vals = eig.eigenvalues;
    for v in vals.iter_mut() {
        if *v < 0.0 {
            if *v < PSD_CLAMP_TOL {
                return Err(GpError::IndefiniteCovariance { eigenvalue: *v });
            }
            *v = 0.0;
        }
    }
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    Ok((&rebuilt + rebuilt.transpose()) * 0.5)
}

/// Joint Gaussian over a model input `(x_k, u_k)` where the control part is
/// deterministic: the covariance is the state covariance padded with zeros.
#[derive(Clone, Debug)]
pub struct UncertainInput {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    state_dim: usize,
}

impl UncertainInput {
    pub fn from_state_control(state: &GaussianState, control: &DVector<f64>) -> Self {
        let n = state.dim();
        let m = control.len();
        let mut mean = DVector::zeros(n + m);
        mean.rows_mut(0, n).copy_from(state.mean());
        mean.rows_mut(n, m).copy_from(control);
        let mut cov = DMatrix::zeros(n + m, n + m);
        cov.view_mut((0, 0), (n, n)).copy_from(state.cov());
        Self {
            mean,
            cov,
            state_dim: n,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }
}
