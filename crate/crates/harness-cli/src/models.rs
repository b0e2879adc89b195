//! Hyperparameter initialization and subsystem training.

use gp_core::{train, Dataset, Hyperparameters, TrainConfig, TrainedGP};
use nalgebra::DVector;

use crate::collect::CollectedData;
use crate::config::GpSection;
use crate::error::HarnessError;

/// One trained model per subsystem. The rotational model lives in scaled
/// space; its dataset carries the transforms.
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub translational: TrainedGP,
    pub rotational: TrainedGP,
}

/// Data-driven starting point for hyperparameter optimization: lengthscales
/// at one standard deviation of each input column, signal variance at the
/// mean target variance, and a noise floor two decades below it.
pub fn initial_hyperparameters(data: &Dataset) -> Hyperparameters {
    let inputs = data.inputs();
    let lengthscales = DVector::from_fn(inputs.ncols(), |j, _| {
        column_std(inputs.column(j).iter()).max(1e-2)
    });
    let targets = data.targets();
    let signal = (0..targets.ncols())
        .map(|j| column_std(targets.column(j).iter()).powi(2))
        .sum::<f64>()
        / targets.ncols() as f64;
    let signal = signal.max(1e-6);
    Hyperparameters::new(lengthscales, signal, (1e-2 * signal).max(1e-8))
        .expect("data-driven initial hyperparameters are always valid")
}

fn column_std<'a>(values: impl Iterator<Item = &'a f64> + Clone) -> f64 {
    let count = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / count;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / count).sqrt()
}

/// Training settings implied by the `[gp]` config section.
pub fn train_config(gp: &GpSection, seed: u64) -> TrainConfig {
    TrainConfig {
        restarts: gp.restarts,
        max_iterations: gp.max_iterations,
        seed,
        ..TrainConfig::default()
    }
}

/// Trains both subsystem models from collected data.
pub fn train_subsystems(
    data: &CollectedData,
    gp: &GpSection,
    seed: u64,
) -> Result<TrainedModels, HarnessError> {
    let translational = train(
        &data.translational,
        &initial_hyperparameters(&data.translational),
        &train_config(gp, seed),
    )?;
    let rotational = train(
        &data.rotational,
        &initial_hyperparameters(&data.rotational),
        &train_config(gp, seed ^ 0x9e37_79b9_7f4a_7c15),
    )?;
    Ok(TrainedModels {
        translational,
        rotational,
    })
}
