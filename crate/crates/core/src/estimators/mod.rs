//! Four routes to the Lyapunov spectrum of orthogonal-plus-Gaussian
//! cocycles, plus the singular-value Markov chain, gap-conjecture harness,
//! and distance diagnostics.
//!
//! The estimators share conventions: exponents are in nats per step, every
//! stochastic estimate carries a standard error, and all sampling is driven
//! by [`RngStream`](crate::rng::RngStream) with fixed internal batching so
//! results are bit-reproducible for a given seed no matter how many worker
//! threads execute the batches.

mod conjecture;
mod direct;
mod exact;
mod sigma;
mod theta_moment;

pub use conjecture::{gap_conjecture_report, GapEntry, GapReport, GapVerdict};
pub use direct::estimate_direct;
pub use exact::{
    estimate_approx_mc, estimate_exact_mc, estimate_exact_mc_detailed, estimate_paired_mc,
    ExactMcDiagnostics, PairedMcReport,
};
pub use sigma::{
    sigma_equivalence_test, simulate_sigma_chain, ChainUpdate, SigmaChainResult, SigmaChainState,
    SigmaEquivalenceReport,
};
pub use theta_moment::{theta_log_moment, ThetaMomentReport};

pub use crate::quadrature::quadrature_oracle_d1;

use crate::error::{Error, Result};

/// How a spectrum estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    ExactMc,
    ApproxMc,
    Asymptotic,
    SigmaChain,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::ExactMc => "exact",
            Method::ApproxMc => "approx",
            Method::Asymptotic => "asymptotic",
            Method::SigmaChain => "sigma",
        }
    }
}

/// Seed provenance of an estimate: the master seed and how many logical
/// streams the run consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedInfo {
    pub master_seed: u64,
    pub stream_count: u64,
}

/// Per-exponent point estimates with standard errors.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    pub dim: usize,
    pub epsilon: f64,
    /// lambdas[k-1] estimates the k-th exponent, nats per step.
    pub lambdas: Vec<f64>,
    pub std_errs: Vec<f64>,
    pub method: Method,
    /// Steps or samples, depending on the method.
    pub n_units: u64,
    pub seed_info: SeedInfo,
}

/// Closed-form small-noise spectrum: lambda_k = (d - 2k) eps^2 / 2.
/// Deterministic, so all standard errors are zero.
pub fn asymptotic_spectrum(dim: usize, epsilon: f64) -> Result<SpectrumEstimate> {
    if dim < 1 {
        return Err(Error::ZeroDimension);
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be >= 0, got {epsilon}"),
        });
    }
    let lambdas = (1..=dim)
        .map(|k| (dim as f64 - 2.0 * k as f64) * epsilon * epsilon / 2.0)
        .collect();
    Ok(SpectrumEstimate {
        dim,
        epsilon,
        lambdas,
        std_errs: vec![0.0; dim],
        method: Method::Asymptotic,
        n_units: 0,
        seed_info: SeedInfo {
            master_seed: 0,
            stream_count: 0,
        },
    })
}

/// Fixed Monte Carlo batch size. Batches, not workers, define the stream
/// layout, so the estimate does not depend on the thread count.
pub(crate) const MC_BATCH: u64 = 8192;

/// Number of contiguous batches used for batch-means standard errors on
/// serially correlated chains.
pub(crate) const TIME_BATCHES: u64 = 32;
