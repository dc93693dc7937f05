use thiserror::Error;

/// Errors shared across the whole library.
#[derive(Debug, Error)]
pub enum SqError {
    #[error("vector has no squared-norm mass to sample from")]
    EmptySupport,

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("duplicate index {0} in sparse input")]
    DuplicateIndex(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("value count {len} != {buckets} buckets * {size} per bucket")]
    LengthMismatch {
        len: usize,
        buckets: usize,
        size: usize,
    },

    #[error("acceptance probability {prob} > 1 at index {index}; C bound too small")]
    AcceptanceBoundViolated { index: usize, prob: f64 },

    #[error("integration oracle inconsistent: branch probability {0} outside [0,1]")]
    InconsistentOracle(f64),

    #[error("rejection sampling gave up after {attempts} attempts")]
    AbortedAfterBudget { attempts: u64 },

    #[error("Vw = 0, overhead C(V,w) undefined")]
    ZeroImage,

    #[error("error parameter {eps} outside (0, {max}]")]
    InvalidEpsilon { eps: f64, max: f64 },

    #[error("norm slack {0} too large for the estimator (need <= 0.5)")]
    SlackTooLarge(f64),

    #[error("reported norm {reported} outside [{lo}, {hi})")]
    NormBoundViolated { reported: f64, lo: f64, hi: f64 },

    #[error("description rank {found} smaller than requested {need}")]
    InsufficientRank { found: usize, need: usize },

    #[error("zero diagonal value in the singular-value factor")]
    SingularSigma,

    #[error("iteration failed to converge after {0} sweeps")]
    ConvergenceFailure(usize),

    #[error("spectrum must be positive, nonincreasing, and survive the noise level")]
    SpectrumViolation,

    #[error("dimension must be at least 1")]
    EmptyDimension,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("bad file format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, SqError>;
