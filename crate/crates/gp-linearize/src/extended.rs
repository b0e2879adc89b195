use gp_core::{GaussianState, PSD_CLAMP_TOL};
use nalgebra::{DMatrix, DVector};

use crate::error::LinearizeError;

/// A Gaussian belief flattened into one vector: the mean followed by the
/// covariance square root, column major. This turns the probabilistic
/// dynamics into a deterministic map that can be linearized like any other.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedState {
    vec: DVector<f64>,
    state_dim: usize,
}

impl ExtendedState {
    /// Wraps a raw vector of length `n + n^2`. The tail is interpreted as an
    /// `n x n` square-root factor `S` with covariance `S S^T`; it need not be
    /// symmetric (finite-difference probes perturb single entries), although
    /// [`extend`] always produces the symmetric principal root.
    pub fn from_vector(vec: DVector<f64>, state_dim: usize) -> Result<Self, LinearizeError> {
        let expect = state_dim + state_dim * state_dim;
        if vec.len() != expect {
            return Err(LinearizeError::Dimension(format!(
                "extended state of dimension {state_dim} needs {expect} entries, got {}",
                vec.len()
            )));
        }
        if vec.iter().any(|v| !v.is_finite()) {
            return Err(LinearizeError::Dimension(
                "extended state entries must be finite".into(),
            ));
        }
        Ok(Self { vec, state_dim })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Total length `n + n^2`.
    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.vec
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.vec
    }

    pub fn mean(&self) -> DVector<f64> {
        self.vec.rows(0, self.state_dim).into_owned()
    }

    /// The square-root factor reshaped from the tail, column major.
    pub fn sqrt_cov(&self) -> DMatrix<f64> {
        let n = self.state_dim;
        DMatrix::from_column_slice(n, n, &self.vec.as_slice()[n..])
    }

    /// Recovers the Gaussian belief: covariance `S S^T`, which is PSD for any
    /// tail content.
    pub fn collapse(&self) -> Result<GaussianState, LinearizeError> {
        let s = self.sqrt_cov();
        let mut cov = &s * s.transpose();
        // S S^T is symmetric up to roundoff; make it exact for the PSD check.
        for i in 0..cov.nrows() {
            for j in 0..i {
                let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        Ok(GaussianState::new(self.mean(), cov)?)
    }
}

/// Flattens a belief into an [`ExtendedState`] using the symmetric principal
/// square root of the covariance (eigendecomposition, negative eigenvalues
/// within tolerance clamped to zero).
pub fn extend(state: &GaussianState) -> Result<ExtendedState, LinearizeError> {
    let n = state.dim();
    let eig = state.cov().clone().symmetric_eigen();
    let mut roots = eig.eigenvalues.clone();
    for v in roots.iter_mut() {
        if *v < PSD_CLAMP_TOL {
            return Err(LinearizeError::InvalidCovariance { eigenvalue: *v });
        }
        *v = v.max(0.0).sqrt();
    }
    let mut sqrt = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (sqrt[(i, j)] + sqrt[(j, i)]);
            sqrt[(i, j)] = v;
            sqrt[(j, i)] = v;
        }
    }

    let mut vec = DVector::zeros(n + n * n);
    vec.rows_mut(0, n).copy_from(state.mean());
    vec.rows_mut(n, n * n)
        .copy_from_slice(sqrt.as_slice());
    ExtendedState::from_vector(vec, n)
}
