use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::GpError;

/// Kernel and noise hyperparameters for one scalar output dimension.
///
/// Values are held in log space so that gradient-based optimization is
/// unconstrained while the natural-space accessors stay positive by
/// construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    log_lengthscales: DVector<f64>,
    log_signal_variance: f64,
    log_noise_variance: f64,
}

impl Hyperparameters {
    /// Builds from natural-space values (`lengthscales` is the per-input-dimension
    /// ARD vector, `signal_variance` and `noise_variance` are variances, not
    /// standard deviations).
    pub fn new(
        lengthscales: DVector<f64>,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self, GpError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !lengthscales.iter().all(|&l| ok(l)) {
            return Err(GpError::InvalidHyperparameters(format!(
                "lengthscales {lengthscales:?}"
            )));
        }
        if !ok(signal_variance) || !ok(noise_variance) {
            return Err(GpError::InvalidHyperparameters(format!(
                "signal_variance={signal_variance}, noise_variance={noise_variance}"
            )));
        }
        Ok(Self {
            log_lengthscales: lengthscales.map(f64::ln),
            log_signal_variance: signal_variance.ln(),
            log_noise_variance: noise_variance.ln(),
        })
    }

    /// Number of input dimensions the kernel accepts.
    pub fn input_dim(&self) -> usize {
        self.log_lengthscales.len()
    }

    /// ARD lengthscales in natural space.
    pub fn lengthscales(&self) -> DVector<f64> {
        self.log_lengthscales.map(f64::exp)
    }

    /// Squared lengthscales, i.e. the diagonal of the Mahalanobis metric.
    pub fn squared_lengthscales(&self) -> DVector<f64> {
        self.log_lengthscales.map(|v| (2.0 * v).exp())
    }

    pub fn signal_variance(&self) -> f64 {
        self.log_signal_variance.exp()
    }

    pub fn noise_variance(&self) -> f64 {
        self.log_noise_variance.exp()
    }

    /// Packs the log-space parameters as `[log ls.., log sf2, log sn2]`.
    pub fn to_log_vector(&self) -> DVector<f64> {
        let p = self.input_dim();
        let mut v = DVector::zeros(p + 2);
        v.rows_mut(0, p).copy_from(&self.log_lengthscales);
        v[p] = self.log_signal_variance;
        v[p + 1] = self.log_noise_variance;
        v
    }

    /// Inverse of [`Hyperparameters::to_log_vector`].
    pub fn from_log_vector(v: &DVector<f64>) -> Self {
        let p = v.len() - 2;
        Self {
            log_lengthscales: v.rows(0, p).into_owned(),
            log_signal_variance: v[p],
            log_noise_variance: v[p + 1],
        }
    }
}
