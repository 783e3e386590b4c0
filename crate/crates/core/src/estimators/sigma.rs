//! The singular-value Markov chain Sigma_{n+1} = D((I + eps N) Sigma_n) and
//! its distributional-equivalence test against the full matrix product.
//!
//! The chain state lives in log space. Once the spectrum spreads past what a
//! double can represent after exponentiation, the state is split into
//! contiguous blocks at the widest gaps: a block is rescaled by its own top
//! entry, projected off the subspace spanned by the blocks above it, and
//! resolved with the relative-threshold Jacobi kernel. The splitting error
//! is of order exp(-gap) relative, which is far below double precision at
//! the gaps where splits actually happen.

use rayon::prelude::*;

use super::{Method, SeedInfo, SpectrumEstimate, MC_BATCH, TIME_BATCHES};
use crate::ensembles::{sample_gaussian_matrix, sample_haar_orthogonal};
use crate::error::{Error, Result};
use crate::matrix::{singular_values, symmetric_eigenvalues, vec_dot, vec_norm, Matrix};
use crate::rng::RngStream;
use crate::stats::{batch_means_std_err, ks_two_sample, KsResult};

/// Maximum within-block log spread. Rescaled entries stay normal and the
/// Gram matrix formed from them stays above the underflow threshold.
const SPREAD_CAP: f64 = 300.0;

/// Chain update rule. `RawDiagonal` drops the singular-value decomposition
/// and keeps the raw diagonal of the product; it is the deliberately wrong
/// variant used as a negative control in the equivalence test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainUpdate {
    SingularValues,
    RawDiagonal,
}

/// Chain state: log singular values, non-increasing.
#[derive(Debug, Clone)]
pub struct SigmaChainState {
    pub log_diag: Vec<f64>,
    pub step: u64,
}

impl SigmaChainState {
    pub fn initial(dim: usize) -> Self {
        SigmaChainState {
            log_diag: vec![0.0; dim],
            step: 0,
        }
    }
}

/// Contiguous blocks whose internal log spread stays within the cap,
/// splitting at the widest internal gap until every block complies (a
/// singleton always does).
fn partition_blocks(l: &[f64]) -> Vec<(usize, usize)> {
    let mut blocks = vec![(0, l.len())];
    let mut i = 0;
    while i < blocks.len() {
        let (a, b) = blocks[i];
        if b - a > 1 && l[a] - l[b - 1] > SPREAD_CAP {
            let cut = (a + 1..b)
                .max_by(|&p, &q| {
                    let gp = l[p - 1] - l[p];
                    let gq = l[q - 1] - l[q];
                    gp.partial_cmp(&gq).unwrap()
                })
                .unwrap();
            blocks[i] = (a, cut);
            blocks.insert(i + 1, (cut, b));
        } else {
            i += 1;
        }
    }
    blocks
}

/// Advances the log-space state by one multiplication with `m`.
fn step_singular_values(state: &mut SigmaChainState, m: &Matrix) -> Result<()> {
    let d = state.log_diag.len();
    let l = &state.log_diag;
    let blocks = partition_blocks(l);

    let mut new_l = vec![0.0f64; d];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    for &(a, b) in &blocks {
        let scale = l[a];
        let k = b - a;
        // columns of m * diag(e^l), rescaled by the block top
        let mut cols: Vec<Vec<f64>> = (a..b)
            .map(|j| {
                let factor = (l[j] - scale).exp();
                (0..d).map(|i| m.get(i, j) * factor).collect()
            })
            .collect();
        for col in &mut cols {
            for _ in 0..2 {
                for q in &basis {
                    let coef = vec_dot(q, col);
                    for (ci, qi) in col.iter_mut().zip(q) {
                        *ci -= coef * qi;
                    }
                }
            }
        }
        let mut gram = Matrix::zeros(k);
        for p in 0..k {
            for q in p..k {
                let dot = vec_dot(&cols[p], &cols[q]);
                gram.set(p, q, dot);
                gram.set(q, p, dot);
            }
        }
        let eigs = symmetric_eigenvalues(&gram)?;
        for (i, &e) in eigs.iter().enumerate() {
            if !e.is_finite() || e <= 0.0 {
                return Err(Error::FrameCollapse { step: state.step });
            }
            new_l[a + i] = scale + 0.5 * e.ln();
        }
        for mut col in cols {
            for _ in 0..2 {
                for q in &basis {
                    let coef = vec_dot(q, &col);
                    for (ci, qi) in col.iter_mut().zip(q) {
                        *ci -= coef * qi;
                    }
                }
            }
            let norm = vec_norm(&col);
            if !norm.is_normal() {
                return Err(Error::FrameCollapse { step: state.step });
            }
            for ci in &mut col {
                *ci /= norm;
            }
            basis.push(col);
        }
    }
    new_l.sort_by(|x, y| y.partial_cmp(x).unwrap());
    state.log_diag = new_l;
    state.step += 1;
    Ok(())
}

/// The wrong update: log of the absolute diagonal of the product, no
/// singular values, no reordering.
fn step_raw_diagonal(state: &mut SigmaChainState, m: &Matrix) -> Result<()> {
    for (k, lk) in state.log_diag.iter_mut().enumerate() {
        let diag = m.get(k, k).abs();
        if diag == 0.0 {
            return Err(Error::FrameCollapse { step: state.step });
        }
        *lk += diag.ln();
    }
    state.step += 1;
    Ok(())
}

pub fn sigma_chain_step(state: &mut SigmaChainState, m: &Matrix, update: ChainUpdate) -> Result<()> {
    match update {
        ChainUpdate::SingularValues => step_singular_values(state, m),
        ChainUpdate::RawDiagonal => step_raw_diagonal(state, m),
    }
}

/// Final chain state plus the spectrum estimate read off the per-step log
/// growth (batch means over contiguous time batches).
#[derive(Debug, Clone)]
pub struct SigmaChainResult {
    pub final_state: SigmaChainState,
    pub spectrum: SpectrumEstimate,
}

/// Runs the chain from Sigma_0 = I for `n_steps`.
pub fn simulate_sigma_chain(
    dim: usize,
    epsilon: f64,
    n_steps: u64,
    rng: &mut RngStream,
) -> Result<SigmaChainResult> {
    if dim < 1 {
        return Err(Error::ZeroDimension);
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be >= 0, got {epsilon}"),
        });
    }
    if n_steps < 1 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            reason: "must be >= 1".into(),
        });
    }
    let n_batches = TIME_BATCHES.min(n_steps);
    let mut state = SigmaChainState::initial(dim);
    let mut batch_sums = vec![vec![0.0f64; n_batches as usize]; dim];
    let mut batch_len = vec![0u64; n_batches as usize];
    let mut prev = state.log_diag.clone();
    for step in 0..n_steps {
        let noise = sample_gaussian_matrix(dim, rng);
        let m = Matrix::perturbed_identity(epsilon, &noise);
        step_singular_values(&mut state, &m)?;
        let batch = ((step as u128 * n_batches as u128) / n_steps as u128) as usize;
        for k in 0..dim {
            batch_sums[k][batch] += state.log_diag[k] - prev[k];
        }
        batch_len[batch] += 1;
        prev.copy_from_slice(&state.log_diag);
    }
    let lambdas: Vec<f64> = state.log_diag.iter().map(|l| l / n_steps as f64).collect();
    let std_errs: Vec<f64> = (0..dim)
        .map(|k| {
            let means: Vec<f64> = batch_sums[k]
                .iter()
                .zip(&batch_len)
                .filter(|(_, &len)| len > 0)
                .map(|(s, &len)| s / len as f64)
                .collect();
            batch_means_std_err(&means)
        })
        .collect();
    let spectrum = SpectrumEstimate {
        dim,
        epsilon,
        lambdas,
        std_errs,
        method: Method::SigmaChain,
        n_units: n_steps,
        seed_info: SeedInfo {
            master_seed: rng.master_seed(),
            stream_count: 1,
        },
    };
    Ok(SigmaChainResult {
        final_state: state,
        spectrum,
    })
}

/// Two-sample KS comparison between the law of log s(A^(n)) under the
/// explicit n-fold product (with i.i.d. Haar orthogonal factors) and the law
/// of the chain state after n steps, for the top and bottom singular values.
#[derive(Debug, Clone)]
pub struct SigmaEquivalenceReport {
    pub dim: usize,
    pub epsilon: f64,
    pub n_steps: u64,
    pub m_samples: u64,
    pub update: ChainUpdate,
    pub top: KsResult,
    pub bottom: KsResult,
}

/// Draws `m_samples` of each route and reports the KS statistics. The
/// product route multiplies A_n ... A_1 with A_i = O_i + eps N_i, O_i Haar;
/// the chain route runs `update` from the identity. `n_steps` is capped at
/// 32 so the explicit product stays well inside double range.
pub fn sigma_equivalence_test(
    dim: usize,
    epsilon: f64,
    n_steps: u64,
    m_samples: u64,
    rng: &RngStream,
    update: ChainUpdate,
) -> Result<SigmaEquivalenceReport> {
    if dim < 1 {
        return Err(Error::ZeroDimension);
    }
    if !(1..=32).contains(&n_steps) {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            reason: format!("explicit product route needs 1 <= n <= 32, got {n_steps}"),
        });
    }
    if m_samples < 1000 {
        return Err(Error::InvalidParameter {
            name: "m_samples",
            reason: format!("KS asymptotics need at least 1000 samples, got {m_samples}"),
        });
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be >= 0, got {epsilon}"),
        });
    }

    let n_batches = m_samples.div_ceil(MC_BATCH);
    let ranges: Vec<(u64, u64)> = (0..n_batches)
        .map(|b| (b * MC_BATCH, ((b + 1) * MC_BATCH).min(m_samples)))
        .collect();

    // product route
    let product: Vec<(f64, f64)> = ranges
        .par_iter()
        .enumerate()
        .flat_map(|(b, &(lo, hi))| {
            let mut stream = rng.substream(2 * b as u64);
            let mut out = Vec::with_capacity((hi - lo) as usize);
            for _ in lo..hi {
                let mut prod = Matrix::identity(dim);
                for _ in 0..n_steps {
                    let base = sample_haar_orthogonal(dim, &mut stream);
                    let noise = sample_gaussian_matrix(dim, &mut stream);
                    let mut a = base;
                    for i in 0..dim {
                        for j in 0..dim {
                            let v = a.get(i, j) + epsilon * noise.get(i, j);
                            a.set(i, j, v);
                        }
                    }
                    prod = a.mul(&prod);
                }
                let sv = singular_values(&prod).expect("finite product");
                out.push((sv.largest().ln(), sv.smallest().ln()));
            }
            out
        })
        .collect();

    // chain route
    let chain: Vec<(f64, f64)> = ranges
        .par_iter()
        .enumerate()
        .map(|(b, &(lo, hi))| {
            let mut stream = rng.substream(2 * b as u64 + 1);
            let mut out = Vec::with_capacity((hi - lo) as usize);
            for _ in lo..hi {
                let mut state = SigmaChainState::initial(dim);
                for _ in 0..n_steps {
                    let noise = sample_gaussian_matrix(dim, &mut stream);
                    let m = Matrix::perturbed_identity(epsilon, &noise);
                    sigma_chain_step(&mut state, &m, update)?;
                }
                let top = state.log_diag[0];
                let bottom = state.log_diag[dim - 1];
                out.push((top, bottom));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let top_x: Vec<f64> = product.iter().map(|p| p.0).collect();
    let top_y: Vec<f64> = chain.iter().map(|p| p.0).collect();
    let bot_x: Vec<f64> = product.iter().map(|p| p.1).collect();
    let bot_y: Vec<f64> = chain.iter().map(|p| p.1).collect();
    Ok(SigmaEquivalenceReport {
        dim,
        epsilon,
        n_steps,
        m_samples,
        update,
        top: ks_two_sample(&top_x, &top_y),
        bottom: ks_two_sample(&bot_x, &bot_y),
    })
}
