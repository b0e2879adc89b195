use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Per-column affine map onto a fixed target interval.
///
/// Fitting maps each column's observed `[min, max]` onto `[lo, hi]`; constant
/// columns cannot define a range, so they map to the interval midpoint with
/// unit gain and are flagged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTransform {
    anchors: DVector<f64>,
    gains: DVector<f64>,
    lo: f64,
    constant: Vec<bool>,
}

impl ScalingTransform {
    /// Fits column-wise from the rows of `data`.
    pub fn fit(data: &DMatrix<f64>, lo: f64, hi: f64) -> Self {
        assert!(hi > lo, "target interval must be nonempty");
        assert!(data.nrows() > 0, "cannot fit a scaling on zero rows");
        let cols = data.ncols();
        let mut anchors = DVector::zeros(cols);
        let mut gains = DVector::zeros(cols);
        let mut constant = vec![false; cols];
        let mid = 0.5 * (lo + hi);
        for j in 0..cols {
            let col = data.column(j);
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for &v in col.iter() {
                min = min.min(v);
                max = max.max(v);
            }
            if max > min {
                anchors[j] = min;
                gains[j] = (hi - lo) / (max - min);
            } else {
                // Degenerate column: place it at the midpoint, keep the map invertible.
                anchors[j] = min - (mid - lo);
                gains[j] = 1.0;
                constant[j] = true;
            }
        }
        Self {
            anchors,
            gains,
            lo,
            constant,
        }
    }

    /// Identity map over `dim` columns.
    pub fn identity(dim: usize) -> Self {
        Self {
            anchors: DVector::zeros(dim),
            gains: DVector::from_element(dim, 1.0),
            lo: 0.0,
            constant: vec![false; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.gains.len()
    }

    /// Scaled units per raw unit for each column; strictly positive.
    pub fn gains(&self) -> &DVector<f64> {
        &self.gains
    }

    /// True for columns that were constant in the fitted data.
    pub fn is_constant_column(&self, j: usize) -> bool {
        self.constant[j]
    }

    pub fn scale_vec(&self, raw: &DVector<f64>) -> DVector<f64> {
        assert_eq!(raw.len(), self.dim());
        DVector::from_fn(raw.len(), |j, _| {
            self.lo + (raw[j] - self.anchors[j]) * self.gains[j]
        })
    }

    pub fn unscale_vec(&self, scaled: &DVector<f64>) -> DVector<f64> {
        assert_eq!(scaled.len(), self.dim());
        DVector::from_fn(scaled.len(), |j, _| {
            self.anchors[j] + (scaled[j] - self.lo) / self.gains[j]
        })
    }

    /// Applies the map to every row of `data`.
    pub fn scale_rows(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(data.ncols(), self.dim());
        DMatrix::from_fn(data.nrows(), data.ncols(), |i, j| {
            self.lo + (data[(i, j)] - self.anchors[j]) * self.gains[j]
        })
    }

    /// Scales a difference of raw vectors (offsets cancel, only gains apply).
    pub fn scale_delta(&self, delta: &DVector<f64>) -> DVector<f64> {
        assert_eq!(delta.len(), self.dim());
        delta.component_mul(&self.gains)
    }

    pub fn unscale_delta(&self, delta: &DVector<f64>) -> DVector<f64> {
        assert_eq!(delta.len(), self.dim());
        delta.component_div(&self.gains)
    }
}
