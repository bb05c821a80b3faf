use std::path::PathBuf;

use thiserror::Error;

use crate::generation::Generation;

/// Failure of a single endpoint call.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndpointError {
    /// No connection could be made (refused, DNS, timeout).
    #[error("endpoint unreachable: {0}")]
    Unreachable(String),
    /// The server answered but asked us to retry (429, 5xx).
    #[error("transient endpoint failure: {0}")]
    Transient(String),
    /// The server rejected this request or returned something unusable.
    #[error("endpoint rejected request: {0}")]
    Permanent(String),
}

impl EndpointError {
    pub fn is_retryable(&self) -> bool {
        !matches!(self, EndpointError::Permanent(_))
    }
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("template error: {0}")]
    Template(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// The endpoint stayed unreachable; `partial` holds every generation that did complete.
    #[error("transport error: {message} ({} generations completed)", partial.len())]
    Transport { message: String, partial: Vec<Generation> },
    #[error("cache {}: {source}", path.display())]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("mock fixture {}: {message}", path.display())]
    Fixture { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] dimabsa_core::Error),
}

pub type Result<T> = std::result::Result<T, ClientError>;
