use thiserror::Error;

/// Errors surfaced by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A point or configuration lies outside the domain of the object it was
    /// handed to (non-spacelike configuration, point off a surface, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid parameters or model setup.
    #[error("configuration error: {0}")]
    Config(String),
    /// The requested state space is larger than the allowed budget.
    #[error("state dimension {dim} exceeds budget {limit}")]
    Budget { dim: usize, limit: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
