//! Direct product simulation: evolve an orthonormal frame under the cocycle
//! and read exponents off the diagonal of periodic QR re-orthonormalizations.

use super::{Method, SeedInfo, SpectrumEstimate, TIME_BATCHES};
use crate::ensembles::{next_base, next_base_checked, sample_gaussian_matrix, CocycleSpec};
use crate::error::{Error, Result};
use crate::matrix::{qr, Matrix};
use crate::rng::RngStream;
use crate::stats::batch_means_std_err;

/// Simulates A_n = O_n + eps N_n acting on an orthonormal frame for
/// `n_steps`, re-orthonormalizing via QR every `reorth_period` steps and
/// accumulating the log of the triangular diagonal. Exponent k is the
/// accumulated log for column k divided by n_steps; standard errors come
/// from batch means over contiguous time batches (the increments are
/// serially correlated, so i.i.d. errors would be too small).
///
/// No burn-in: the limit is initialization-independent and the finite-n
/// transient is absorbed by the error bars.
pub fn estimate_direct(
    spec: &mut CocycleSpec,
    n_steps: u64,
    reorth_period: u64,
    rng: &mut RngStream,
) -> Result<SpectrumEstimate> {
    if reorth_period < 1 || n_steps < reorth_period {
        return Err(Error::InvalidParameter {
            name: "reorth_period",
            reason: format!("need n_steps >= reorth_period >= 1, got {n_steps} / {reorth_period}"),
        });
    }
    if spec.epsilon.is_nan() || spec.epsilon < 0.0 {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be >= 0, got {}", spec.epsilon),
        });
    }
    let d = spec.dim;
    let eps = spec.epsilon;
    let n_batches = TIME_BATCHES.min(n_steps);

    let mut frame = Matrix::identity(d);
    // compensated accumulation: a million same-sign terms would otherwise
    // drift by ~1e-13, visible against the exact deterministic cases
    let mut totals = vec![0.0f64; d];
    let mut comps = vec![0.0f64; d];
    let mut batch_sums = vec![vec![0.0f64; n_batches as usize]; d];
    let mut batch_len = vec![0u64; n_batches as usize];
    let mut steps_since_reorth = 0u64;
    let mut pending: Vec<(usize, u64)> = Vec::new(); // (batch, steps) covered since last reorth

    for step in 0..n_steps {
        let base = if spec.enforce_norm_bound {
            next_base_checked(spec, rng)?
        } else {
            next_base(spec, rng)
        };
        let a = if eps == 0.0 {
            base
        } else {
            let noise = sample_gaussian_matrix(d, rng);
            let mut a = base;
            for i in 0..d {
                for j in 0..d {
                    let v = a.get(i, j) + eps * noise.get(i, j);
                    a.set(i, j, v);
                }
            }
            a
        };
        frame = a.mul(&frame);
        steps_since_reorth += 1;
        let batch = ((step as u128 * n_batches as u128) / n_steps as u128) as usize;
        match pending.last_mut() {
            Some((b, count)) if *b == batch => *count += 1,
            _ => pending.push((batch, 1)),
        }
        if steps_since_reorth == reorth_period || step + 1 == n_steps {
            let (q, r) = qr(&frame).map_err(|e| match e {
                Error::DegenerateColumn { .. } | Error::NonFiniteInput => {
                    Error::FrameCollapse { step }
                }
                other => other,
            })?;
            let denom = steps_since_reorth as f64;
            for k in 0..d {
                let diag = r[(k, k)];
                if !diag.is_normal() {
                    return Err(Error::FrameCollapse { step });
                }
                let log_growth = diag.ln();
                let y = log_growth - comps[k];
                let t = totals[k] + y;
                comps[k] = (t - totals[k]) - y;
                totals[k] = t;
                // attribute the growth to the batches this span covered,
                // proportionally to the steps spent in each
                for &(b, count) in &pending {
                    batch_sums[k][b] += log_growth * count as f64 / denom;
                }
            }
            for &(b, count) in &pending {
                batch_len[b] += count;
            }
            pending.clear();
            frame = q;
            steps_since_reorth = 0;
        }
    }

    let lambdas: Vec<f64> = totals.iter().map(|t| t / n_steps as f64).collect();
    let std_errs: Vec<f64> = (0..d)
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
    Ok(SpectrumEstimate {
        dim: d,
        epsilon: eps,
        lambdas,
        std_errs,
        method: Method::Direct,
        n_units: n_steps,
        seed_info: SeedInfo {
            master_seed: rng.master_seed(),
            stream_count: 1,
        },
    })
}
