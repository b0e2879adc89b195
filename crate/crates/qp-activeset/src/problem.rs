use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::QpError;

/// A strictly convex QP in the condensed-MPC shape:
/// minimize `1/2 x' Phi x + psi' x (+ constant)` subject to `G x <= bounds`.
///
/// Two-sided constraint systems are expected to arrive pre-stacked as
/// `[G; -G]` rows; this type treats every row independently.
#[derive(Clone, Debug)]
pub struct QPProblem {
    phi: DMatrix<f64>,
    psi: DVector<f64>,
    constraints: DMatrix<f64>,
    bounds: DVector<f64>,
    constant: f64,
    chol: Cholesky<f64, Dyn>,
}

impl QPProblem {
    /// Validates shape, symmetry and positive definiteness (via Cholesky),
    /// then stores the factorization for every later KKT solve.
    pub fn new(
        phi: DMatrix<f64>,
        psi: DVector<f64>,
        constraints: DMatrix<f64>,
        bounds: DVector<f64>,
        constant: f64,
    ) -> Result<Self, QpError> {
        let dim = psi.len();
        if phi.nrows() != dim || phi.ncols() != dim {
            return Err(QpError::Dimension(format!(
                "phi is {}x{}, psi has {dim} entries",
                phi.nrows(),
                phi.ncols()
            )));
        }
        if constraints.ncols() != dim || constraints.nrows() != bounds.len() {
            return Err(QpError::Dimension(format!(
                "{} constraint rows of width {} against {} bounds and {dim} variables",
                constraints.nrows(),
                constraints.ncols(),
                bounds.len()
            )));
        }
        if phi.iter().any(|v| !v.is_finite())
            || psi.iter().any(|v| !v.is_finite())
            || constraints.iter().any(|v| !v.is_finite())
            || bounds.iter().any(|v| !v.is_finite())
            || !constant.is_finite()
        {
            return Err(QpError::NonFinite);
        }

        let scale = phi.amax().max(1.0);
        let asym = (&phi - phi.transpose()).amax();
        if asym > 1e-8 * scale {
            return Err(QpError::NotSymmetric(asym));
        }
        let mut sym = phi;
        for i in 0..dim {
            for j in 0..i {
                let v = 0.5 * (sym[(i, j)] + sym[(j, i)]);
                sym[(i, j)] = v;
                sym[(j, i)] = v;
            }
        }
        let chol = Cholesky::new(sym.clone()).ok_or(QpError::NotPositiveDefinite)?;
        Ok(Self {
            phi: sym,
            psi,
            constraints,
            bounds,
            constant,
            chol,
        })
    }

    /// Number of decision variables.
    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.bounds.len()
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn psi(&self) -> &DVector<f64> {
        &self.psi
    }

    pub fn constraints(&self) -> &DMatrix<f64> {
        &self.constraints
    }

    pub fn bounds(&self) -> &DVector<f64> {
        &self.bounds
    }

    /// The constant term, carried for cost reporting only.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Full quadratic value `1/2 x' Phi x + psi' x + constant`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.phi * x).dot(x) + self.psi.dot(x) + self.constant
    }

    /// Largest amount by which any constraint row exceeds its bound
    /// (nonpositive means feasible).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let gx = &self.constraints * x;
        (0..self.bounds.len())
            .map(|i| gx[i] - self.bounds[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn phi_cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }
}
