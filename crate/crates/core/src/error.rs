use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A tuple's fields do not fit the task (category present for DimASTE or missing for DimASQP).
    #[error("tuple shape does not match {task}: {detail}")]
    Shape { task: crate::TaskKind, detail: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("{}:{line}: {message}", path.display())]
    Data { path: PathBuf, line: usize, message: String },
    #[error("data error: {0}")]
    Dataset(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Data { path: path.into(), line, message: message.into() }
    }
}
