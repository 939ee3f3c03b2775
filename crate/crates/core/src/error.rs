use thiserror::Error;

/// Errors raised by the solvers and the data layer.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation produced a non-finite or otherwise unusable number.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The ODE integrator gave up.
    #[error("integration failed at lambda = {lambda}: {reason}")]
    Integration { lambda: String, reason: String },

    /// No bracket could be established for an eigenvalue.
    #[error("eigenvalue search failed for index {index}: {reason}")]
    Search { index: usize, reason: String },

    /// The spectral parameter sits on (or numerically next to) an eigenvalue.
    #[error("pole: lambda = {lambda} is within tolerance of an eigenvalue")]
    Pole { lambda: String },

    /// A norming constant or related quantity could not be formed.
    #[error("degenerate eigen record at index {index}: {reason}")]
    Degenerate { index: usize, reason: String },

    /// The caller combined inputs that do not fit together.
    #[error("usage error: {0}")]
    Usage(String),

    /// Input data failed schema or invariant validation.
    #[error("parse error in `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
