//! Sweep execution over the (d, epsilon, estimator) grid: deterministic
//! stream assignment by stable hash, parallel cells, errors recorded as rows.

use std::time::Instant;

use rayon::prelude::*;

use lyapunov_core::ensembles::CocycleSpec;
use lyapunov_core::estimators::{
    asymptotic_spectrum, estimate_approx_mc, estimate_direct, estimate_exact_mc,
    simulate_sigma_chain, SpectrumEstimate,
};
use lyapunov_core::rng::RngStream;

use crate::config::{EstimatorKind, ExperimentConfig};

/// One output row per (d, epsilon, k, estimator). Failed cells keep their
/// rows with NaN values so the grid stays complete.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub d: usize,
    pub epsilon: f64,
    pub k: usize,
    pub estimator: EstimatorKind,
    pub lambda_hat: f64,
    pub std_err: f64,
    pub n_units: u64,
    pub master_seed: u64,
    pub wall_time_seconds: f64,
}

impl ResultRow {
    pub fn is_error(&self) -> bool {
        self.lambda_hat.is_nan()
    }
}

/// FNV-1a over a canonical byte encoding of the cell key. Stable across
/// platforms and releases, so adding cells to a sweep never reshuffles the
/// streams of existing cells.
pub fn cell_stream_index(d: usize, epsilon: f64, estimator: EstimatorKind, replicate: u64) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    eat(b"cell");
    eat(&(d as u64).to_le_bytes());
    eat(&epsilon.to_bits().to_le_bytes());
    eat(estimator.name().as_bytes());
    eat(&replicate.to_le_bytes());
    hash
}

fn run_cell(
    config: &ExperimentConfig,
    d: usize,
    epsilon: f64,
    estimator: EstimatorKind,
) -> Result<SpectrumEstimate, lyapunov_core::Error> {
    let stream = RngStream::new(
        config.master_seed,
        cell_stream_index(d, epsilon, estimator, 0),
    );
    match estimator {
        EstimatorKind::Exact => estimate_exact_mc(d, epsilon, config.n_samples, &stream),
        EstimatorKind::Approx => estimate_approx_mc(d, epsilon, config.n_samples, &stream),
        EstimatorKind::Asymptotic => asymptotic_spectrum(d, epsilon),
        EstimatorKind::Direct => {
            let mut spec = CocycleSpec::identity(d, epsilon);
            let mut rng = stream;
            estimate_direct(&mut spec, config.n_steps, config.reorth_period, &mut rng)
        }
        EstimatorKind::Sigma => {
            let mut rng = stream;
            simulate_sigma_chain(d, epsilon, config.n_steps, &mut rng).map(|r| r.spectrum)
        }
    }
}

/// Expected n_units for a cell, for completeness accounting.
pub fn cell_units(config: &ExperimentConfig, estimator: EstimatorKind) -> u64 {
    match estimator {
        EstimatorKind::Exact | EstimatorKind::Approx => config.n_samples,
        EstimatorKind::Direct | EstimatorKind::Sigma => config.n_steps,
        EstimatorKind::Asymptotic => 0,
    }
}

/// Executes the Cartesian product of dims x epsilons x estimators on a
/// worker pool of the configured size. Results are deterministic and
/// independent of the worker count: streams are assigned per cell by stable
/// hash and each estimator batches its own work on fixed boundaries. Cell
/// failures become NaN rows (with a note on stderr), never aborts.
pub fn run_sweep(config: &ExperimentConfig) -> Vec<ResultRow> {
    let mut cells = Vec::new();
    for &d in &config.dims {
        for &epsilon in &config.epsilons {
            for &estimator in &config.estimators {
                cells.push((d, epsilon, estimator));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("worker pool");
    let mut rows: Vec<ResultRow> = pool.install(|| {
        cells
            .par_iter()
            .flat_map(|&(d, epsilon, estimator)| {
                let start = Instant::now();
                let outcome = run_cell(config, d, epsilon, estimator);
                let wall_time_seconds = start.elapsed().as_secs_f64();
                match outcome {
                    Ok(est) => (1..=d)
                        .map(|k| ResultRow {
                            d,
                            epsilon,
                            k,
                            estimator,
                            lambda_hat: est.lambdas[k - 1],
                            std_err: est.std_errs[k - 1],
                            n_units: est.n_units,
                            master_seed: config.master_seed,
                            wall_time_seconds,
                        })
                        .collect::<Vec<_>>(),
                    Err(err) => {
                        eprintln!(
                            "cell (d={d}, eps={epsilon}, {}) failed: {err}",
                            estimator.name()
                        );
                        (1..=d)
                            .map(|k| ResultRow {
                                d,
                                epsilon,
                                k,
                                estimator,
                                lambda_hat: f64::NAN,
                                std_err: f64::NAN,
                                n_units: 0,
                                master_seed: config.master_seed,
                                wall_time_seconds,
                            })
                            .collect::<Vec<_>>()
                    }
                }
            })
            .collect()
    });
    rows.sort_by(|a, b| {
        a.d.cmp(&b.d)
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.estimator.cmp(&b.estimator))
            .then(a.k.cmp(&b.k))
    });
    rows
}
