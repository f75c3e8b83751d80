use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A node without outgoing weight cannot be row-normalized.
    #[error("node {node} has no neighbors; its row cannot be normalized")]
    Normalization { node: usize },

    #[error("graph generation failed after {attempts} attempts: {reason}")]
    GenerationFailure { attempts: usize, reason: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("non-finite opinion encountered at step {step}")]
    NumericalFailure { step: usize },

    /// `I - A` is singular or too badly conditioned to trust a solve.
    #[error("model is not stable ({reason}); inspect the stability report")]
    Unstable { reason: String },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error(
        "spectral radius did not converge after {iterations} iterations; \
         bracket [{lower:.3e}, {upper:.3e}], estimate {estimate:.12}"
    )]
    NotConverged {
        iterations: usize,
        lower: f64,
        upper: f64,
        estimate: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
