use thiserror::Error;

/// Errors produced by estimators, samplers and the simulation engine.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The data do not carry enough information for the estimator
    /// (constant margin, collinear signs, zero scale, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An iterative algorithm hit its iteration cap.
    #[error("{algorithm} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        algorithm: &'static str,
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    /// Invalid scenario or CLI configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
