use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::GpError;
use crate::scaling::ScalingTransform;

/// Affine transforms applied to a dataset's state and control columns before
/// it was stored, kept so that models trained on it can map back to raw units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub state: ScalingTransform,
    pub control: ScalingTransform,
}

/// Supervised one-step transitions for dynamics learning.
///
/// Row `i` holds the model input `(x_i, u_i)` and the difference target
/// `y_i = x_{i+1} - x_i`. All rows live in the same (possibly scaled) space.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: DMatrix<f64>,
    targets: DMatrix<f64>,
    state_dim: usize,
    scaling: Option<ScalingRecord>,
}

impl Dataset {
    pub fn new(
        inputs: DMatrix<f64>,
        targets: DMatrix<f64>,
        state_dim: usize,
        scaling: Option<ScalingRecord>,
    ) -> Result<Self, GpError> {
        if inputs.nrows() == 0 {
            return Err(GpError::EmptyDataset);
        }
        if inputs.nrows() != targets.nrows() {
            return Err(GpError::DimensionMismatch(format!(
                "{} input rows vs {} target rows",
                inputs.nrows(),
                targets.nrows()
            )));
        }
        if targets.ncols() != state_dim || inputs.ncols() <= state_dim {
            return Err(GpError::DimensionMismatch(format!(
                "state_dim {state_dim} incompatible with {} input / {} target columns",
                inputs.ncols(),
                targets.ncols()
            )));
        }
        Ok(Self {
            inputs,
            targets,
            state_dim,
            scaling,
        })
    }

    /// Builds difference targets from a logged trajectory: `states` has one
    /// more entry than `controls`, and `y_k = states[k+1] - states[k]`.
    pub fn from_trajectory(
        states: &[DVector<f64>],
        controls: &[DVector<f64>],
        scaling: Option<ScalingRecord>,
    ) -> Result<Self, GpError> {
        if states.len() != controls.len() + 1 || controls.is_empty() {
            return Err(GpError::DimensionMismatch(format!(
                "{} states with {} controls (need one more state than controls)",
                states.len(),
                controls.len()
            )));
        }
        let n = states[0].len();
        let m = controls[0].len();
        let count = controls.len();
        let mut inputs = DMatrix::zeros(count, n + m);
        let mut targets = DMatrix::zeros(count, n);
        for k in 0..count {
            for j in 0..n {
                inputs[(k, j)] = states[k][j];
                targets[(k, j)] = states[k + 1][j] - states[k][j];
            }
            for j in 0..m {
                inputs[(k, n + j)] = controls[k][j];
            }
        }
        Self::new(inputs, targets, n, scaling)
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.input_dim() - self.state_dim
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.targets
    }

    pub fn scaling(&self) -> Option<&ScalingRecord> {
        self.scaling.as_ref()
    }

    pub fn input_row(&self, i: usize) -> DVector<f64> {
        self.inputs.row(i).transpose()
    }

    /// The first `count` transitions, preserving order.
    pub fn prefix(&self, count: usize) -> Result<Self, GpError> {
        if count == 0 || count > self.len() {
            return Err(GpError::DimensionMismatch(format!(
                "prefix of {count} rows from a dataset of {}",
                self.len()
            )));
        }
        Ok(Self {
            inputs: self.inputs.rows(0, count).into_owned(),
            targets: self.targets.rows(0, count).into_owned(),
            state_dim: self.state_dim,
            scaling: self.scaling.clone(),
        })
    }

    /// Restriction to a single target column (used for per-dimension training).
    pub fn select_target(&self, dim: usize) -> Self {
        assert!(dim < self.state_dim);
        Self {
            inputs: self.inputs.clone(),
            targets: self.targets.columns(dim, 1).into_owned(),
            state_dim: 1,
            scaling: None,
        }
    }

    /// Canonical CSV encoding: header `x_1..x_n,u_1..u_m,dx_1..dx_n`, one row
    /// per transition, shortest round-trip float formatting.
    pub fn to_csv_string(&self) -> String {
        let n = self.state_dim;
        let m = self.control_dim();
        let mut out = String::new();
        let mut cols: Vec<String> = Vec::new();
        cols.extend((1..=n).map(|j| format!("x_{j}")));
        cols.extend((1..=m).map(|j| format!("u_{j}")));
        cols.extend((1..=n).map(|j| format!("dx_{j}")));
        out.push_str(&cols.join(","));
        out.push('\n');
        for i in 0..self.len() {
            let mut fields: Vec<String> = Vec::with_capacity(n + m + n);
            for j in 0..n + m {
                fields.push(format!("{}", self.inputs[(i, j)]));
            }
            for j in 0..n {
                fields.push(format!("{}", self.targets[(i, j)]));
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), GpError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// Parses the CSV encoding produced by [`Dataset::to_csv_string`]. The
    /// scaling record is not part of the CSV and comes back as `None`.
    pub fn read_csv(path: &Path) -> Result<Self, GpError> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| GpError::DatasetFile("empty file".into()))??;
        let names: Vec<&str> = header.split(',').collect();
        let n = names.iter().filter(|c| c.starts_with("x_")).count();
        let m = names.iter().filter(|c| c.starts_with("u_")).count();
        let dn = names.iter().filter(|c| c.starts_with("dx_")).count();
        if n == 0 || m == 0 || dn != n || names.len() != 2 * n + m {
            return Err(GpError::DatasetFile(format!("unrecognized header {header:?}")));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let vals =
                vals.map_err(|e| GpError::DatasetFile(format!("bad row {line:?}: {e}")))?;
            if vals.len() != 2 * n + m {
                return Err(GpError::DatasetFile(format!(
                    "row has {} fields, expected {}",
                    vals.len(),
                    2 * n + m
                )));
            }
            rows.push(vals);
        }
        if rows.is_empty() {
            return Err(GpError::EmptyDataset);
        }
        let count = rows.len();
        let mut inputs = DMatrix::zeros(count, n + m);
        let mut targets = DMatrix::zeros(count, n);
        for (i, row) in rows.iter().enumerate() {
            for j in 0..n + m {
                inputs[(i, j)] = row[j];
            }
            for j in 0..n {
                targets[(i, j)] = row[n + m + j];
            }
        }
        Self::new(inputs, targets, n, None)
    }

    /// Content hash of the canonical CSV encoding (hex-encoded SHA-256).
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_csv_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
