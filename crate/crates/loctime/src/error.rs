//! Error type shared across the crate.

use thiserror::Error;

/// Errors raised by path construction, scheme runs, estimators, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An object was built with inconsistent or out-of-range parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Two objects that must share provenance (driver, coefficient, grid) do not.
    #[error("usage error: {0}")]
    Usage(String),

    /// Config text could not be parsed or failed validation.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
