use thiserror::Error;

/// Errors produced by the scenario, detector and Monte Carlo layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration invariant is violated; the payload names the field.
    #[error("validation error: {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("singular update: {0}")]
    SingularUpdate(String),
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
