//! Cyclic Jacobi eigenvalues for symmetric matrices and singular values
//! derived from them.

use super::Matrix;
use crate::error::{Error, Result};

const REL_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 64;

/// Non-increasing singular values of a square matrix.
#[derive(Debug, Clone)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    pub fn smallest(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Eigenvalues of a symmetric matrix in non-increasing order.
///
/// Rotations fire on the relative criterion |a_pq| > tol * sqrt(a_pp a_qq),
/// which keeps small eigenvalues of graded positive-definite matrices at
/// high relative accuracy (plain absolute thresholds lose them entirely).
pub fn symmetric_eigenvalues(g: &Matrix) -> Result<Vec<f64>> {
    if !g.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let d = g.dim();
    let mut m = g.clone();
    if d > 1 {
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..d - 1 {
                for q in p + 1..d {
                    let app = m.get(p, p);
                    let aqq = m.get(q, q);
                    let apq = m.get(p, q);
                    let denom = app.abs().sqrt() * aqq.abs().sqrt();
                    if apq.abs() <= REL_TOL * denom || apq == 0.0 {
                        continue;
                    }
                    rotated = true;
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta == 0.0 {
                        1.0
                    } else {
                        theta.signum() / (theta.abs() + theta.hypot(1.0))
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    m.set(p, p, app - t * apq);
                    m.set(q, q, aqq + t * apq);
                    m.set(p, q, 0.0);
                    m.set(q, p, 0.0);
                    for k in 0..d {
                        if k == p || k == q {
                            continue;
                        }
                        let akp = m.get(k, p);
                        let akq = m.get(k, q);
                        let new_p = c * akp - s * akq;
                        let new_q = s * akp + c * akq;
                        m.set(k, p, new_p);
                        m.set(p, k, new_p);
                        m.set(k, q, new_q);
                        m.set(q, k, new_q);
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut eigs: Vec<f64> = (0..d).map(|i| m.get(i, i)).collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(eigs)
}

/// Singular values via the symmetric eigen-decomposition of A^T A, adequate
/// for small dense matrices in double precision.
pub fn singular_values(a: &Matrix) -> Result<SingularSpectrum> {
    if !a.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let gram = a.transpose().mul(a);
    let eigs = symmetric_eigenvalues(&gram)?;
    let values = eigs.into_iter().map(|l| l.max(0.0).sqrt()).collect();
    Ok(SingularSpectrum { values })
}
