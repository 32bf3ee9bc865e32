use alloc::string::String;

/// Errors produced by the surrogate-MCMC core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel matrix is ill-conditioned (jitter reached {jitter:e})")]
    IllConditioned { jitter: f64 },

    #[error("point is already present in the training set")]
    DuplicatePoint,

    #[error("operation requires a {0} surrogate")]
    ModeMismatch(&'static str),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("contract violation: {0}")]
    ContractViolation(&'static str),

    #[error("target `{target}` has no {capability} capability")]
    MissingCapability { target: String, capability: &'static str },

    #[error("parameter outside the model domain")]
    Domain,

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("degenerate chain: {0}")]
    DegenerateChain(&'static str),

    #[error("ODE solver error: {0}")]
    Solver(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
