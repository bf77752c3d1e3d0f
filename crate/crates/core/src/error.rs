use thiserror::Error;

use crate::am::AmState;

/// Errors produced by the estimator and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("structural violation: {0}")]
    StructuralViolation(String),

    #[error("non-finite value encountered in {0}")]
    NonFiniteValue(&'static str),

    #[error("reference signal has zero energy")]
    ZeroReference,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("GSOs do not share the same support")]
    SupportMismatch,

    #[error("no connected graph after {attempts} attempts")]
    GraphGenerationFailed { attempts: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("SCP step failed at outer iteration {outer_iter}: {source}")]
    ScpFailed {
        outer_iter: usize,
        #[source]
        source: Box<Error>,
        /// Last feasible iterate before the failure.
        last_good: Box<AmState>,
    },

    #[error("all {0} starts failed")]
    AllStartsFailed(usize),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
