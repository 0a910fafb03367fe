use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the crate.
///
/// Variants split into two families: data errors (the input cannot be used
/// as given) and computation errors (a numerical routine failed on valid
/// input). The CLI maps them onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("series is degenerate: {0}")]
    Degenerate(String),

    #[error("series contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("autocorrelation matrix is not positive definite at lag {lag} (|pacf| = {value})")]
    NotPositiveDefinite { lag: usize, value: f64 },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("model is not stationary or not invertible: {0}")]
    NotStationary(String),

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("replicate {index} failed after {attempts} attempts: {source}")]
    ReplicateFailed {
        index: usize,
        attempts: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}: {reason}")]
    Parse { row: usize, reason: String },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True when the failure stems from the input data or configuration
    /// rather than from a numerical routine.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::TooShort { .. }
                | Error::Degenerate(_)
                | Error::NonFinite { .. }
                | Error::Io { .. }
                | Error::Parse { .. }
                | Error::Config(_)
                | Error::InvalidParameter { .. }
        )
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::TooShort { .. } => "too_short",
            Error::Degenerate(_) => "degenerate",
            Error::NonFinite { .. } => "non_finite",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::RankDeficient => "rank_deficient",
            Error::NotStationary(_) => "not_stationary",
            Error::Optimizer(_) => "optimizer",
            Error::ReplicateFailed { .. } => "replicate_failed",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
        }
    }
}
