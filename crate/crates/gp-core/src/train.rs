use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ScalingRecord};
use crate::error::GpError;
use crate::hyper::Hyperparameters;
use crate::likelihood::{cholesky_with_jitter, lml_with_cache, pairwise_sq_diffs};
use crate::optim::bfgs_maximize;

/// Settings for hyperparameter optimization.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    /// Random restarts in addition to the provided initial point.
    pub restarts: usize,
    /// Iteration cap per start.
    pub max_iterations: usize,
    /// Stop once the log-space gradient norm falls below this.
    pub gradient_tolerance: f64,
    /// Seed for the restart perturbation stream.
    pub seed: u64,
    /// Lower bound on the fitted noise variance as a fraction of the target
    /// dimension's sample variance. Near-noiseless targets otherwise admit
    /// likelihood optima that interpolate the data with wildly oscillating
    /// mean functions; their values look fine but their derivatives are
    /// garbage, which matters to anyone linearizing the model.
    pub noise_floor: f64,
    /// Bounds on each fitted lengthscale as fractions of that input's data
    /// range. On correlated inputs (data gathered in closed loop, say) the
    /// likelihood surface has near-flat ridges running out to enormous
    /// lengthscales and signal variances; fits on those ridges reproduce the
    /// data but assign arbitrary, often huge, slopes along directions the
    /// data does not pin down. Boxing the search keeps every accepted fit at
    /// scales the data can actually speak to.
    pub lengthscale_bounds: (f64, f64),
    /// Upper bound on the fitted signal variance as a multiple of the target
    /// dimension's sample variance, closing the same degenerate ridges from
    /// the amplitude side.
    pub signal_variance_cap: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            seed: 0x5eed_60_c0de,
            noise_floor: 1e-6,
            lengthscale_bounds: (1e-3, 1e3),
            signal_variance_cap: 1e4,
        }
    }
}

/// Per-output-dimension training outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionReport {
    pub log_marginal_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Independent scalar GPs over each difference-target dimension, sharing one
/// training set, with the factorizations needed for prediction cached.
#[derive(Clone, Debug)]
pub struct TrainedGP {
    dataset: Dataset,
    hypers: Vec<Hyperparameters>,
    reports: Vec<DimensionReport>,
    chols: Vec<Cholesky<f64, Dyn>>,
    alphas: Vec<DVector<f64>>,
    kinvs: Vec<DMatrix<f64>>,
    jitters: Vec<f64>,
    // Input-independent factor of the moment-matching Q matrices, one per
    // unordered output pair (a <= b): exp(-1/2 d_ij' (L_a + L_b)^{-1} d_ij).
    pair_dist: Vec<DMatrix<f64>>,
}

impl TrainedGP {
    /// Assembles a model from per-dimension hyperparameters, factorizing the
    /// Gram matrices and precomputing the moment-matching caches.
    pub fn from_hyperparameters(
        dataset: Dataset,
        hypers: Vec<Hyperparameters>,
        reports: Vec<DimensionReport>,
    ) -> Result<Self, GpError> {
        let n = dataset.state_dim();
        if hypers.len() != n {
            return Err(GpError::DimensionMismatch(format!(
                "{} hyperparameter sets for {n} output dimensions",
                hypers.len()
            )));
        }
        for h in &hypers {
            if h.input_dim() != dataset.input_dim() {
                return Err(GpError::DimensionMismatch(format!(
                    "hyperparameters accept {} inputs, dataset has {}",
                    h.input_dim(),
                    dataset.input_dim()
                )));
            }
        }
        let d = dataset.len();
        let mut chols = Vec::with_capacity(n);
        let mut alphas = Vec::with_capacity(n);
        let mut kinvs = Vec::with_capacity(n);
        let mut jitters = Vec::with_capacity(n);
        for (dim, h) in hypers.iter().enumerate() {
            let mut k_sigma = crate::kernel::gram(dataset.inputs(), h);
            let sn2 = h.noise_variance();
            for i in 0..d {
                k_sigma[(i, i)] += sn2;
            }
            let jc = cholesky_with_jitter(&k_sigma)?;
            let y = dataset.targets().column(dim).into_owned();
            alphas.push(jc.chol.solve(&y));
            kinvs.push(jc.chol.inverse());
            jitters.push(jc.jitter);
            chols.push(jc.chol);
        }

        let pair_dist = build_pair_distances(&dataset, &hypers);
        let reports = if reports.is_empty() {
            hypers
                .iter()
                .map(|_| DimensionReport {
                    log_marginal_likelihood: f64::NAN,
                    converged: true,
                    iterations: 0,
                })
                .collect()
        } else {
            reports
        };
        Ok(Self {
            dataset,
            hypers,
            reports,
            chols,
            alphas,
            kinvs,
            jitters,
            pair_dist,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn hyperparameters(&self) -> &[Hyperparameters] {
        &self.hypers
    }

    pub fn reports(&self) -> &[DimensionReport] {
        &self.reports
    }

    pub fn state_dim(&self) -> usize {
        self.dataset.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.dataset.input_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.dataset.control_dim()
    }

    pub(crate) fn chol(&self, dim: usize) -> &Cholesky<f64, Dyn> {
        &self.chols[dim]
    }

    pub(crate) fn alpha(&self, dim: usize) -> &DVector<f64> {
        &self.alphas[dim]
    }

    pub(crate) fn kinv(&self, dim: usize) -> &DMatrix<f64> {
        &self.kinvs[dim]
    }

    pub fn jitter(&self, dim: usize) -> f64 {
        self.jitters[dim]
    }

    pub(crate) fn pair_distance(&self, a: usize, b: usize) -> &DMatrix<f64> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        &self.pair_dist[pair_index(lo, hi, self.state_dim())]
    }
}

fn pair_index(a: usize, b: usize, n: usize) -> usize {
    // Row-major upper triangle including the diagonal.
    a * n - a * (a + 1) / 2 + b
}

fn build_pair_distances(dataset: &Dataset, hypers: &[Hyperparameters]) -> Vec<DMatrix<f64>> {
    let n = hypers.len();
    let d = dataset.len();
    let sq = pairwise_sq_diffs(dataset.inputs());
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        let la = hypers[a].squared_lengthscales();
        for b in a..n {
            let lb = hypers[b].squared_lengthscales();
            let inv_sum: Vec<f64> = la
                .iter()
                .zip(lb.iter())
                .map(|(&x, &y)| 1.0 / (x + y))
                .collect();
            let mut expo = DMatrix::zeros(d, d);
            for (c, &w) in inv_sum.iter().enumerate() {
                expo += sq_matrix(&sq, c) * w;
            }
            out.push(expo.map(|r| (-0.5 * r).exp()));
        }
    }
    out
}

fn sq_matrix<'a>(
    sq: &'a crate::likelihood::PairwiseSqDiffs,
    c: usize,
) -> &'a DMatrix<f64> {
    sq.dim(c)
}

/// Trains one GP per output dimension by maximizing the log marginal
/// likelihood from `init` plus `cfg.restarts` perturbed starts.
///
/// A dimension that fails to converge keeps its best iterate and is flagged in
/// its [`DimensionReport`].
pub fn train(
    data: &Dataset,
    init: &Hyperparameters,
    cfg: &TrainConfig,
) -> Result<TrainedGP, GpError> {
    if init.input_dim() != data.input_dim() {
        return Err(GpError::DimensionMismatch(format!(
            "init accepts {} inputs, dataset has {}",
            init.input_dim(),
            data.input_dim()
        )));
    }
    let n = data.state_dim();
    let results: Vec<(Hyperparameters, DimensionReport)> = (0..n)
        .into_par_iter()
        .map(|dim| train_dimension(data, init, cfg, dim))
        .collect();

    let mut hypers = Vec::with_capacity(n);
    let mut reports = Vec::with_capacity(n);
    for (h, r) in results {
        hypers.push(h);
        reports.push(r);
    }
    TrainedGP::from_hyperparameters(data.clone(), hypers, reports)
}

/// Sample variance of the (single) target column, floored for constants.
fn target_variance(sub: &Dataset) -> f64 {
    let targets = sub.targets().column(0);
    let n = targets.len() as f64;
    let mean = targets.sum() / n;
    let var = targets.iter().map(|&y| (y - mean) * (y - mean)).sum::<f64>() / n;
    var.max(1e-12)
}

/// Data-driven box for the log hyperparameter vector `[ls.., sf2, sn2]`:
/// lengthscales relative to each input's data range, signal variance
/// relative to the target's sample variance, and the configured noise floor.
/// The upper noise bound is only the generic overflow guard.
fn search_box(sub: &Dataset, cfg: &TrainConfig) -> (DVector<f64>, DVector<f64>) {
    let input_dim = sub.input_dim();
    let var = target_variance(sub);
    let mut lower = DVector::from_element(input_dim + 2, -40.0);
    let mut upper = DVector::from_element(input_dim + 2, 40.0);
    for i in 0..input_dim {
        let column = sub.inputs().column(i);
        let min = column.min();
        let max = column.max();
        let range = if max > min { max - min } else { 1.0 };
        lower[i] = (cfg.lengthscale_bounds.0 * range).ln();
        upper[i] = (cfg.lengthscale_bounds.1 * range).ln();
    }
    lower[input_dim] = (1e-9 * var).ln();
    upper[input_dim] = (cfg.signal_variance_cap * var).ln();
    lower[input_dim + 1] = (cfg.noise_floor * var).max(1e-12).ln();
    (lower, upper)
}

fn train_dimension(
    data: &Dataset,
    init: &Hyperparameters,
    cfg: &TrainConfig,
    dim: usize,
) -> (Hyperparameters, DimensionReport) {
    let sub = data.select_target(dim);
    let cache = pairwise_sq_diffs(sub.inputs());
    let (box_lower, box_upper) = search_box(&sub, cfg);
    let objective = |logv: &DVector<f64>| -> Option<(f64, DVector<f64>)> {
        // Stay finite and inside the search box; the optimizer treats None
        // as a wall.
        if logv.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for i in 0..logv.len() {
            if logv[i] < box_lower[i] || logv[i] > box_upper[i] {
                return None;
            }
        }
        let h = Hyperparameters::from_log_vector(logv);
        lml_with_cache(&cache, &sub, &h).ok()
    };

    let init_log = init.to_log_vector();
    let mut best: Option<(f64, DVector<f64>, bool, usize)> = None;
    for restart in 0..=cfg.restarts {
        let mut start = if restart == 0 {
            init_log.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(
                cfg.seed ^ ((dim as u64) << 32) ^ restart as u64,
            );
            DVector::from_fn(init_log.len(), |i, _| {
                init_log[i] + rng.random_range(-1.5..1.5)
            })
        };
        for i in 0..start.len() {
            start[i] = start[i].clamp(box_lower[i], box_upper[i]);
        }
        let out = bfgs_maximize(
            &objective,
            start,
            cfg.max_iterations,
            cfg.gradient_tolerance,
        );
        if out.value.is_finite() {
            let better = match &best {
                None => true,
                Some((v, ..)) => out.value > *v,
            };
            if better {
                best = Some((out.value, out.x, out.converged, out.iterations));
            }
        }
    }

    match best {
        Some((value, logv, converged, iterations)) => (
            Hyperparameters::from_log_vector(&logv),
            DimensionReport {
                log_marginal_likelihood: value,
                converged,
                iterations,
            },
        ),
        // Every start failed to evaluate; keep the caller's init and flag it.
        None => (
            init.clone(),
            DimensionReport {
                log_marginal_likelihood: f64::NEG_INFINITY,
                converged: false,
                iterations: 0,
            },
        ),
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    state_dim: usize,
    input_dim: usize,
    dataset_path: String,
    dataset_sha256: String,
    dimensions: Vec<ModelDimension>,
    scaling: Option<ScalingRecord>,
}

#[derive(Serialize, Deserialize)]
struct ModelDimension {
    log_lengthscales: Vec<f64>,
    log_signal_variance: f64,
    log_noise_variance: f64,
    log_marginal_likelihood: f64,
    converged: bool,
    iterations: usize,
}

/// Writes hyperparameters plus a dataset reference (path and content hash) as
/// a TOML model file.
pub fn save_model(gp: &TrainedGP, path: &Path, dataset_path: &str) -> Result<(), GpError> {
    let file = ModelFile {
        format: "gp-model/1".to_string(),
        state_dim: gp.state_dim(),
        input_dim: gp.input_dim(),
        dataset_path: dataset_path.to_string(),
        dataset_sha256: gp.dataset().content_hash(),
        dimensions: gp
            .hypers
            .iter()
            .zip(gp.reports.iter())
            .map(|(h, r)| {
                let logv = h.to_log_vector();
                let p = h.input_dim();
                ModelDimension {
                    log_lengthscales: logv.rows(0, p).iter().copied().collect(),
                    log_signal_variance: logv[p],
                    log_noise_variance: logv[p + 1],
                    log_marginal_likelihood: r.log_marginal_likelihood,
                    converged: r.converged,
                    iterations: r.iterations,
                }
            })
            .collect(),
        scaling: gp.dataset().scaling().cloned(),
    };
    let text = toml::to_string(&file).map_err(|e| GpError::ModelFile(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads a model file and rebuilds all caches against `dataset`, verifying the
/// recorded content hash.
pub fn load_model(path: &Path, dataset: Dataset) -> Result<TrainedGP, GpError> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = toml::from_str(&text).map_err(|e| GpError::ModelFile(e.to_string()))?;
    if file.format != "gp-model/1" {
        return Err(GpError::ModelFile(format!("unknown format {:?}", file.format)));
    }
    let hash = dataset.content_hash();
    if hash != file.dataset_sha256 {
        return Err(GpError::ModelFile(format!(
            "dataset hash {hash} does not match recorded {}",
            file.dataset_sha256
        )));
    }
    if dataset.state_dim() != file.state_dim || dataset.input_dim() != file.input_dim {
        return Err(GpError::ModelFile("dataset dimensions do not match model".into()));
    }
    let mut hypers = Vec::with_capacity(file.dimensions.len());
    let mut reports = Vec::with_capacity(file.dimensions.len());
    for dims in &file.dimensions {
        let mut logv = DVector::zeros(dims.log_lengthscales.len() + 2);
        for (i, &v) in dims.log_lengthscales.iter().enumerate() {
            logv[i] = v;
        }
        logv[dims.log_lengthscales.len()] = dims.log_signal_variance;
        logv[dims.log_lengthscales.len() + 1] = dims.log_noise_variance;
        hypers.push(Hyperparameters::from_log_vector(&logv));
        reports.push(DimensionReport {
            log_marginal_likelihood: dims.log_marginal_likelihood,
            converged: dims.converged,
            iterations: dims.iterations,
        });
    }
    TrainedGP::from_hyperparameters(dataset, hypers, reports)
}
