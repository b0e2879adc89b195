use nalgebra::{DMatrix, DVector};

use crate::error::MpcError;

/// Elementwise box `lower <= v <= upper`. Entries must be finite; use a
/// large magnitude (for example `1e9`) for coordinates that are effectively
/// unconstrained.
#[derive(Debug, Clone)]
pub struct Bounds {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl Bounds {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, MpcError> {
        if lower.len() != upper.len() {
            return Err(MpcError::Dimension(format!(
                "bound vectors have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().chain(upper.iter()).any(|v| !v.is_finite()) {
            return Err(MpcError::Config("bounds must be finite".into()));
        }
        if let Some(c) = (0..lower.len()).find(|&c| lower[c] > upper[c]) {
            return Err(MpcError::Config(format!(
                "lower bound exceeds upper bound in coordinate {c}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.len() == 0
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        v.len() == self.len()
            && (0..v.len()).all(|c| self.lower[c] <= v[c] && v[c] <= self.upper[c])
    }
}

/// Receding-horizon controller settings: horizon, quadratic weights, state
/// and input boxes, and the confidence level used for constraint tightening.
#[derive(Debug, Clone)]
pub struct MPCConfig {
    horizon: usize,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    state_bounds: Bounds,
    input_bounds: Bounds,
    confidence: f64,
    warm_start: bool,
}

impl MPCConfig {
    /// Validates and stores the weights: `q` must be symmetric positive
    /// semidefinite, `r` symmetric positive definite, and both must match
    /// the corresponding bound dimensions. Confidence defaults to 0.95 and
    /// warm starting is enabled.
    pub fn new(
        horizon: usize,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        state_bounds: Bounds,
        input_bounds: Bounds,
    ) -> Result<Self, MpcError> {
        if horizon == 0 {
            return Err(MpcError::Config("horizon must be at least 1".into()));
        }
        check_symmetric(&q, "state weight Q")?;
        check_symmetric(&r, "input weight R")?;
        if q.nrows() != state_bounds.len() {
            return Err(MpcError::Dimension(format!(
                "Q is {}x{} but the state bounds have {} coordinates",
                q.nrows(),
                q.ncols(),
                state_bounds.len()
            )));
        }
        if r.nrows() != input_bounds.len() {
            return Err(MpcError::Dimension(format!(
                "R is {}x{} but the input bounds have {} coordinates",
                r.nrows(),
                r.ncols(),
                input_bounds.len()
            )));
        }
        let scale = q.amax().max(1.0);
        let eigen = q.clone().symmetric_eigen();
        if eigen.eigenvalues.iter().any(|&v| v < -1e-9 * scale) {
            return Err(MpcError::Config(
                "state weight Q must be positive semidefinite".into(),
            ));
        }
        if r.clone().cholesky().is_none() {
            return Err(MpcError::Config(
                "input weight R must be positive definite".into(),
            ));
        }
        Ok(Self {
            horizon,
            q,
            r,
            state_bounds,
            input_bounds,
            confidence: 0.95,
            warm_start: true,
        })
    }

    /// Replaces the tightening confidence level. Only 0.95 is accepted by
    /// the tightening rule itself, but the value is kept explicit so the
    /// restriction is visible at the call site.
    pub fn with_confidence(mut self, confidence: f64) -> Result<Self, MpcError> {
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(MpcError::Config(format!(
                "confidence level {confidence} is outside (0, 1)"
            )));
        }
        self.confidence = confidence;
        Ok(self)
    }

    pub fn with_warm_start(mut self, enabled: bool) -> Self {
        self.warm_start = enabled;
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn state_bounds(&self) -> &Bounds {
        &self.state_bounds
    }

    pub fn input_bounds(&self) -> &Bounds {
        &self.input_bounds
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn warm_start(&self) -> bool {
        self.warm_start
    }

    pub fn state_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.r.nrows()
    }
}

fn check_symmetric(m: &DMatrix<f64>, label: &str) -> Result<(), MpcError> {
    if m.nrows() != m.ncols() {
        return Err(MpcError::Dimension(format!(
            "{label} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(MpcError::Config(format!("{label} must be finite")));
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-9 * scale {
        return Err(MpcError::Config(format!("{label} must be symmetric")));
    }
    Ok(())
}
