use nalgebra::{DMatrix, DVector};

use crate::config::{Bounds, MPCConfig};
use crate::error::MpcError;

/// Bound placed on coordinates excluded from tightening (dropped rows and
/// the square-root-of-covariance block): wide enough to never activate.
pub(crate) const INERT_BOUND: f64 = 1e12;

/// Expectation of the stage cost under a Gaussian state `N(mu, sigma)`:
/// the quadratic around the mean plus the trace coupling with the state
/// weight, `|mu - r|^2_Q + |u|^2_R + trace(Q sigma)`.
pub fn expected_cost(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    u: &DVector<f64>,
    reference: &DVector<f64>,
    cfg: &MPCConfig,
) -> f64 {
    debug_assert_eq!(mu.len(), cfg.state_dim());
    debug_assert_eq!(u.len(), cfg.control_dim());
    let dev = mu - reference;
    let state = (dev.transpose() * cfg.q() * &dev)[(0, 0)];
    let input = (u.transpose() * cfg.r() * u)[(0, 0)];
    state + input + (cfg.q() * sigma).trace()
}

/// Shrinks a state box by two standard deviations per coordinate, the 95%
/// two-sided confidence margin. Only `confidence = 0.95` is supported;
/// other levels would need a different multiplier.
pub fn tighten_bounds(
    bounds: &Bounds,
    sigma: &DMatrix<f64>,
    confidence: f64,
) -> Result<Bounds, MpcError> {
    let (lower, upper, dropped) = tighten_or_drop(bounds, sigma, confidence)?;
    if !dropped.is_empty() {
        return Err(MpcError::InfeasibleTightening { coordinates: dropped });
    }
    Bounds::new(lower, upper)
}

/// Per-coordinate tightening that widens infeasible coordinates to an inert
/// bound instead of failing, reporting which ones were dropped. Used by the
/// condensed-problem assembly, where dropping a state row for one step is
/// preferable to an unsolvable problem.
pub(crate) fn tighten_or_drop(
    bounds: &Bounds,
    sigma: &DMatrix<f64>,
    confidence: f64,
) -> Result<(DVector<f64>, DVector<f64>, Vec<usize>), MpcError> {
    if (confidence - 0.95).abs() > 1e-12 {
        return Err(MpcError::Config(format!(
            "confidence level {confidence} is not supported; only 0.95 \
             (a two-standard-deviation margin) is implemented"
        )));
    }
    if sigma.nrows() != bounds.len() || sigma.ncols() != bounds.len() {
        return Err(MpcError::Dimension(format!(
            "covariance is {}x{} but the bounds have {} coordinates",
            sigma.nrows(),
            sigma.ncols(),
            bounds.len()
        )));
    }
    let mut lower = bounds.lower().clone();
    let mut upper = bounds.upper().clone();
    let mut dropped = Vec::new();
    for c in 0..bounds.len() {
        let margin = 2.0 * sigma[(c, c)].max(0.0).sqrt();
        let lo = lower[c] + margin;
        let hi = upper[c] - margin;
        if lo > hi {
            dropped.push(c);
            lower[c] = -INERT_BOUND;
            upper[c] = INERT_BOUND;
        } else {
            lower[c] = lo;
            upper[c] = hi;
        }
    }
    Ok((lower, upper, dropped))
}
