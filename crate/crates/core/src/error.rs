use thiserror::Error;

/// Errors surfaced by the estimation and sampling routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error in {context}: {message}")]
    Domain { context: &'static str, message: String },

    /// Structural constraint on the input data was violated.
    #[error("invalid input: {0}")]
    Constraint(String),

    /// Input text could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The data sits on a likelihood boundary where the requested estimator
    /// does not exist (all species distinct, or a single species).
    #[error("model pathology: {0}")]
    Pathology(String),

    /// An exact computation was requested beyond its practical size limit.
    #[error("size guard exceeded in {context}: {message}")]
    SizeGuard { context: &'static str, message: String },

    /// A numerical routine failed to reach its tolerance or detected
    /// catastrophic cancellation.
    #[error("numerical failure in {context}: {message}")]
    Numerical { context: &'static str, message: String },
}

impl Error {
    pub(crate) fn domain(context: &'static str, message: impl Into<String>) -> Self {
        Error::Domain { context, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
