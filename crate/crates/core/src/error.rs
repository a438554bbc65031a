use thiserror::Error;

/// Errors raised by the toolkit. Variants map onto the CLI exit codes.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular lattice basis (determinant 0)")]
    SingularBasis,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("budget exceeded for {what}: {size} > {limit}")]
    Budget {
        what: String,
        size: String,
        limit: String,
    },

    #[error("context is pre-asymptotic: {0}")]
    PreAsymptotic(String),

    #[error("capacity: need {needed} target patterns but only {available} are available")]
    Capacity { needed: String, available: String },

    #[error("inconsistent overlap at {site:?}: {first} vs {second}")]
    InconsistentOverlap { site: Vec<i64>, first: u8, second: u8 },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn budget(what: impl Into<String>, size: impl ToString, limit: impl ToString) -> Self {
        Error::Budget {
            what: what.into(),
            size: size.to_string(),
            limit: limit.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
