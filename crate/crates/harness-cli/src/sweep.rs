//! Training-size sweep: how prediction quality develops as the models see
//! more data.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use gp_core::{predict_point, train, Dataset, TrainedGP};

use crate::collect::CollectedData;
use crate::config::GpSection;
use crate::error::HarnessError;
use crate::models::{initial_hyperparameters, train_config};

/// One subsystem-by-size entry of the sweep table.
///
/// `training_mse` is measured on the rows the model was fitted to, `test_mse`
/// and `average_variance` on the full dataset. Rotational cells are in scaled
/// space, translational cells in raw units — each cell names its space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub subsystem: String,
    /// `"raw"` or `"scaled"`; the space every metric in this cell lives in.
    pub space: String,
    pub size: usize,
    pub training_mse: f64,
    pub test_mse: f64,
    pub average_variance: f64,
    pub converged_dimensions: usize,
    pub failed: bool,
}

/// Full sweep outcome plus the identifiers needed to reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub translational_hash: String,
    pub rotational_hash: String,
}

/// Trains on growing subsets of the collected data and records training MSE,
/// test MSE on the full set, and the average predicted variance.
///
/// Subsets are deterministic prefixes unless the config asks for seeded
/// random subsets. A size that fails to train is recorded as a failed cell
/// and the sweep continues.
pub fn training_sweep(
    data: &CollectedData,
    sizes: &[usize],
    gp: &GpSection,
    seed: u64,
) -> Result<SweepReport, HarnessError> {
    let subsystems: [(&str, &str, &Dataset); 2] = [
        ("translational", "raw", &data.translational),
        ("rotational", "scaled", &data.rotational),
    ];
    for &size in sizes {
        for (name, _, dataset) in &subsystems {
            if size < 1 || size > dataset.len() {
                return Err(HarnessError::Request(format!(
                    "sweep size {size} outside [1, {}] for the {name} dataset",
                    dataset.len()
                )));
            }
        }
    }

    let mut cells = Vec::with_capacity(2 * sizes.len());
    for (name, space, dataset) in subsystems {
        for (index, &size) in sizes.iter().enumerate() {
            let subset = select_subset(dataset, size, gp, seed ^ (index as u64))?;
            let cell = match train(&subset, &initial_hyperparameters(&subset), &train_config(gp, seed)) {
                Ok(model) => {
                    let (training_mse, _) = evaluate(&model, &subset);
                    let (test_mse, average_variance) = evaluate(&model, dataset);
                    SweepCell {
                        subsystem: name.into(),
                        space: space.into(),
                        size,
                        training_mse,
                        test_mse,
                        average_variance,
                        converged_dimensions: model
                            .reports()
                            .iter()
                            .filter(|r| r.converged)
                            .count(),
                        failed: !training_mse.is_finite() || !test_mse.is_finite(),
                    }
                }
                Err(_) => SweepCell {
                    subsystem: name.into(),
                    space: space.into(),
                    size,
                    training_mse: f64::NAN,
                    test_mse: f64::NAN,
                    average_variance: f64::NAN,
                    converged_dimensions: 0,
                    failed: true,
                },
            };
            cells.push(cell);
        }
    }

    Ok(SweepReport {
        cells,
        sizes: sizes.to_vec(),
        seed,
        translational_hash: data.translational.content_hash(),
        rotational_hash: data.rotational.content_hash(),
    })
}

/// Mean squared prediction error and mean predicted variance of `model` over
/// every row of `data`, averaged across rows and output dimensions.
pub fn evaluate(model: &TrainedGP, data: &Dataset) -> (f64, f64) {
    let rows = data.len();
    let outputs = data.state_dim();
    let mut squared_error = 0.0;
    let mut variance = 0.0;
    for i in 0..rows {
        let x = data.input_row(i);
        let (mean, var) = predict_point(model, &x).expect("rows match the model dimensions");
        for j in 0..outputs {
            squared_error += (mean[j] - data.targets()[(i, j)]).powi(2);
            variance += var[j];
        }
    }
    let cells = (rows * outputs) as f64;
    (squared_error / cells, variance / cells)
}

fn select_subset(
    dataset: &Dataset,
    size: usize,
    gp: &GpSection,
    seed: u64,
) -> Result<Dataset, HarnessError> {
    if !gp.random_subsets || size == dataset.len() {
        return Ok(dataset.prefix(size)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    let (chosen, _) = indices.partial_shuffle(&mut rng, size);
    chosen.sort_unstable();
    let inputs = select_rows(dataset.inputs(), chosen);
    let targets = select_rows(dataset.targets(), chosen);
    Ok(Dataset::new(
        inputs,
        targets,
        dataset.state_dim(),
        dataset.scaling().cloned(),
    )?)
}

fn select_rows(matrix: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), matrix.ncols(), |i, j| matrix[(rows[i], j)])
}
