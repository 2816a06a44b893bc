use thiserror::Error;

/// Errors raised by the sampler library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("covariance stayed indefinite after jitter escalation to {jitter:e} (trace {trace:e}, min diagonal {min_diag:e})")]
    JitterExhausted { jitter: f64, trace: f64, min_diag: f64 },

    #[error("triangular matrix has a zero diagonal entry at {index}")]
    SingularDiagonal { index: usize },

    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),

    #[error("within-chain variance is zero in direction {direction}")]
    ZeroWithinVariance { direction: usize },

    #[error("batch sizes differ: chain {chain} holds {found} samples, expected {expected}")]
    UnequalBatchSizes { chain: usize, expected: u64, found: u64 },

    #[error("noise batch exhausted; lag_update must run every n_lag steps")]
    NoiseExhausted,

    #[error("chain {chain} panicked: {message}")]
    ChainPanicked { chain: usize, message: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
