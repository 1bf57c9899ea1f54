use thiserror::Error;

/// Errors returned by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model has {nodes} nodes; exhaustive enumeration is limited to {limit}")]
    SizeLimit { nodes: usize, limit: usize },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("path tracking failed: {lost} of {total} paths lost")]
    TrackingFailure { lost: usize, total: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("estimation failed: {0}")]
    Estimation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
