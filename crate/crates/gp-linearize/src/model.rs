use gp_core::{propagate, TrainedGP};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::LinearizeError;
use crate::extended::{extend, ExtendedState};

/// Finite-difference scheme used to form the Jacobians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeScheme {
    /// Central differences with per-coordinate step `max(base, base * |x_i|)`.
    Central { base_step: f64 },
}

impl Default for DerivativeScheme {
    fn default() -> Self {
        Self::Central { base_step: 1e-6 }
    }
}

impl DerivativeScheme {
    fn step(&self, coordinate: f64) -> f64 {
        match *self {
            Self::Central { base_step } => base_step.max(base_step * coordinate.abs()),
        }
    }
}

/// First-order model of the extended belief dynamics at an operating point:
/// the next increment is `A * delta_s + B * delta_u`.
#[derive(Clone, Debug)]
pub struct LocalModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    state: ExtendedState,
    control: DVector<f64>,
}

impl LocalModel {
    /// Wraps explicitly supplied Jacobians, for callers that already have an
    /// analytic local model instead of a differentiated GP.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        state: ExtendedState,
        control: DVector<f64>,
    ) -> Result<Self, LinearizeError> {
        let dim = state.dim();
        if a.nrows() != dim || a.ncols() != dim {
            return Err(LinearizeError::Dimension(format!(
                "state Jacobian is {}x{}, expected {dim}x{dim}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != dim || b.ncols() != control.len() {
            return Err(LinearizeError::Dimension(format!(
                "control Jacobian is {}x{}, expected {dim}x{}",
                b.nrows(),
                b.ncols(),
                control.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(LinearizeError::Dimension(
                "local model entries must be finite".into(),
            ));
        }
        Ok(Self { a, b, state, control })
    }

    /// `(n+n^2) x (n+n^2)` state Jacobian.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `(n+n^2) x m` control Jacobian.
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn operating_state(&self) -> &ExtendedState {
        &self.state
    }

    pub fn operating_control(&self) -> &DVector<f64> {
        &self.control
    }
}

/// Advances a flattened belief one step: collapse to a Gaussian, propagate it
/// through the GP difference model, flatten the result.
pub fn advance(
    gp: &TrainedGP,
    state: &ExtendedState,
    control: &DVector<f64>,
) -> Result<ExtendedState, LinearizeError> {
    let belief = state.collapse()?;
    let next = propagate(gp, &belief, control)?;
    extend(&next)
}

/// Linearizes the extended dynamics at `(at, u)` over all coordinates.
pub fn linearize(
    gp: &TrainedGP,
    at: &ExtendedState,
    u: &DVector<f64>,
    scheme: DerivativeScheme,
) -> Result<LocalModel, LinearizeError> {
    linearize_columns(gp, at, u, scheme, at.dim())
}

/// Linearizes over the mean block and the controls only, leaving the
/// square-root columns of `A` zero.
///
/// The result is exact for products `A * delta_s` where `delta_s` has a zero
/// square-root tail (e.g. increments between beliefs freshly reset to
/// measurements); callers that form powers of `A` need [`linearize`].
pub fn linearize_mean_columns(
    gp: &TrainedGP,
    at: &ExtendedState,
    u: &DVector<f64>,
    scheme: DerivativeScheme,
) -> Result<LocalModel, LinearizeError> {
    linearize_columns(gp, at, u, scheme, at.state_dim())
}

fn linearize_columns(
    gp: &TrainedGP,
    at: &ExtendedState,
    u: &DVector<f64>,
    scheme: DerivativeScheme,
    state_columns: usize,
) -> Result<LocalModel, LinearizeError> {
    if at.state_dim() != gp.state_dim() {
        return Err(LinearizeError::Dimension(format!(
            "extended state dimension {} vs model {}",
            at.state_dim(),
            gp.state_dim()
        )));
    }
    if u.len() != gp.control_dim() {
        return Err(LinearizeError::Dimension(format!(
            "control dimension {} vs model {}",
            u.len(),
            gp.control_dim()
        )));
    }
    let dim = at.dim();
    let n = at.state_dim();

    let a_cols: Vec<DVector<f64>> = (0..state_columns)
        .into_par_iter()
        .map(|c| {
            let h = scheme.step(at.as_vector()[c]);
            let mut plus = at.as_vector().clone();
            plus[c] += h;
            let mut minus = at.as_vector().clone();
            minus[c] -= h;
            let fp = probe(gp, plus, n, u, || format!("state coordinate {c}"))?;
            let fm = probe(gp, minus, n, u, || format!("state coordinate {c}"))?;
            Ok((fp - fm) / (2.0 * h))
        })
        .collect::<Result<_, LinearizeError>>()?;

    let b_cols: Vec<DVector<f64>> = (0..u.len())
        .into_par_iter()
        .map(|c| {
            let h = scheme.step(u[c]);
            let mut plus = u.clone();
            plus[c] += h;
            let mut minus = u.clone();
            minus[c] -= h;
            let fp = probe(gp, at.as_vector().clone(), n, &plus, || {
                format!("control coordinate {c}")
            })?;
            let fm = probe(gp, at.as_vector().clone(), n, &minus, || {
                format!("control coordinate {c}")
            })?;
            Ok((fp - fm) / (2.0 * h))
        })
        .collect::<Result<_, LinearizeError>>()?;

    let mut a = DMatrix::zeros(dim, dim);
    for (c, col) in a_cols.iter().enumerate() {
        a.column_mut(c).copy_from(col);
    }
    let mut b = DMatrix::zeros(dim, u.len());
    for (c, col) in b_cols.iter().enumerate() {
        b.column_mut(c).copy_from(col);
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(LinearizeError::LinearizationFailed {
            coordinate: "all".into(),
            message: "non-finite Jacobian entry".into(),
        });
    }
    Ok(LocalModel {
        a,
        b,
        state: at.clone(),
        control: u.clone(),
    })
}

fn probe(
    gp: &TrainedGP,
    vec: DVector<f64>,
    state_dim: usize,
    u: &DVector<f64>,
    coordinate: impl Fn() -> String,
) -> Result<DVector<f64>, LinearizeError> {
    let state = ExtendedState::from_vector(vec, state_dim).map_err(|e| {
        LinearizeError::LinearizationFailed {
            coordinate: coordinate(),
            message: e.to_string(),
        }
    })?;
    match advance(gp, &state, u) {
        Ok(next) => Ok(next.into_vector()),
        Err(e) => Err(LinearizeError::LinearizationFailed {
            coordinate: coordinate(),
            message: e.to_string(),
        }),
    }
}
