use thiserror::Error;

/// Errors surfaced by the matrix kernels and estimators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix entries must be finite (found NaN or infinity)")]
    NonFiniteInput,

    #[error("matrix dimension must be at least 1")]
    ZeroDimension,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate column {index} in Gram-Schmidt (norm {norm:e} below guard)")]
    DegenerateColumn { index: usize, norm: f64 },

    #[error("singular input: {0}")]
    SingularInput(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("frame collapse at step {step}: column norm underflowed (reduce reorth_period)")]
    FrameCollapse { step: u64 },

    #[error("base matrix operator norm {norm} exceeds bound {bound}")]
    NormBoundViolation { norm: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
