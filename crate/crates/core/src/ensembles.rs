//! Random matrix samplers and cocycle base-sequence specifications.

use crate::error::{Error, Result};
use crate::matrix::{op_norm, qr, Matrix};
use crate::rng::RngStream;

/// Orthogonality tolerance for user-supplied fixed orthogonal bases.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Slack on the conjecture harness norm bound.
pub const NORM_BOUND_SLACK: f64 = 1e-12;

/// d x d matrix with independent standard normal entries.
pub fn sample_gaussian_matrix(dim: usize, rng: &mut RngStream) -> Matrix {
    assert!(dim >= 1);
    let mut m = Matrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m.set(i, j, rng.standard_normal());
        }
    }
    m
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian sample under the
/// non-negative-diagonal convention on R. The sign convention is what makes
/// the factor Haar; QR with arbitrary diagonal signs is not.
pub fn sample_haar_orthogonal(dim: usize, rng: &mut RngStream) -> Matrix {
    loop {
        let g = sample_gaussian_matrix(dim, rng);
        // Degenerate draws have probability zero; resample if one ever occurs.
        if let Ok((q, _)) = qr(&g) {
            return q;
        }
    }
}

/// True iff some entry of `noise` exceeds |log eps| in absolute value
/// (natural log). Requires 0 < eps < 1 for the threshold to make sense.
pub fn is_bad(noise: &Matrix, epsilon: f64) -> Result<bool> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("bad-set threshold needs 0 < eps < 1, got {epsilon}"),
        });
    }
    let threshold = epsilon.ln().abs();
    Ok(noise.max_abs_entry() > threshold)
}

/// Generator of user-supplied base sequences.
pub trait BaseGenerator: Send {
    fn next(&mut self, rng: &mut RngStream) -> Matrix;
}

impl<F> BaseGenerator for F
where
    F: FnMut(&mut RngStream) -> Matrix + Send,
{
    fn next(&mut self, rng: &mut RngStream) -> Matrix {
        self(rng)
    }
}

/// The base sequence driving a cocycle.
pub enum BaseKind {
    Identity,
    FixedOrthogonal(Matrix),
    IidHaar,
    UserSequence(Box<dyn BaseGenerator>),
}

impl std::fmt::Debug for BaseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaseKind::Identity => write!(f, "Identity"),
            BaseKind::FixedOrthogonal(_) => write!(f, "FixedOrthogonal"),
            BaseKind::IidHaar => write!(f, "IidHaar"),
            BaseKind::UserSequence(_) => write!(f, "UserSequence"),
        }
    }
}

/// A cocycle A_n = O_n + eps N_n: the base sequence O_n (or B_n), the noise
/// amplitude, and the declared bound on the base operator norm.
/// `enforce_norm_bound` is the conjecture-harness flag: when set, every
/// emitted base matrix is checked against the declared bound.
#[derive(Debug)]
pub struct CocycleSpec {
    pub dim: usize,
    pub epsilon: f64,
    pub base: BaseKind,
    pub base_norm_bound: f64,
    pub enforce_norm_bound: bool,
}

impl CocycleSpec {
    pub fn identity(dim: usize, epsilon: f64) -> Self {
        CocycleSpec {
            dim,
            epsilon,
            base: BaseKind::Identity,
            base_norm_bound: 1.0,
            enforce_norm_bound: false,
        }
    }

    pub fn iid_haar(dim: usize, epsilon: f64) -> Self {
        CocycleSpec {
            dim,
            epsilon,
            base: BaseKind::IidHaar,
            base_norm_bound: 1.0,
            enforce_norm_bound: false,
        }
    }

    /// Fixed orthogonal base; rejects matrices that are not orthogonal to
    /// within `ORTHOGONALITY_TOL`.
    pub fn fixed_orthogonal(epsilon: f64, q: Matrix) -> Result<Self> {
        let defect = q.orthogonality_defect();
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::InvalidParameter {
                name: "base",
                reason: format!("matrix is not orthogonal: max |Q^T Q - I| = {defect:e}"),
            });
        }
        Ok(CocycleSpec {
            dim: q.dim(),
            epsilon,
            base: BaseKind::FixedOrthogonal(q),
            base_norm_bound: 1.0,
            enforce_norm_bound: false,
        })
    }

    /// User-supplied base sequence with a declared operator-norm bound.
    /// Pass `f64::INFINITY` to waive the bound for unconstrained experiments.
    pub fn user_sequence(
        dim: usize,
        epsilon: f64,
        base_norm_bound: f64,
        generator: Box<dyn BaseGenerator>,
    ) -> Self {
        CocycleSpec {
            dim,
            epsilon,
            base: BaseKind::UserSequence(generator),
            base_norm_bound,
            enforce_norm_bound: false,
        }
    }
}

/// Next base matrix for the cocycle: Identity returns I, FixedOrthogonal
/// its matrix, IidHaar a fresh sample, UserSequence delegates.
pub fn next_base(spec: &mut CocycleSpec, rng: &mut RngStream) -> Matrix {
    match &mut spec.base {
        BaseKind::Identity => Matrix::identity(spec.dim),
        BaseKind::FixedOrthogonal(q) => q.clone(),
        BaseKind::IidHaar => sample_haar_orthogonal(spec.dim, rng),
        BaseKind::UserSequence(g) => g.next(rng),
    }
}

/// As [`next_base`] but enforcing the declared norm bound, for conjecture
/// harness inputs.
pub fn next_base_checked(spec: &mut CocycleSpec, rng: &mut RngStream) -> Result<Matrix> {
    let bound = spec.base_norm_bound;
    let m = next_base(spec, rng);
    if bound.is_finite() {
        let norm = op_norm(&m)?;
        if norm > bound + NORM_BOUND_SLACK {
            return Err(Error::NormBoundViolation { norm, bound });
        }
    }
    Ok(m)
}
