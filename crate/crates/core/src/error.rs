use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: missing column `{column}`")]
    Schema { column: String },

    #[error("data error for vehicle {vehicle}: {message}")]
    Data { vehicle: i64, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("track {track} is too short: {message}")]
    TooShort { track: i64, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported format version `{found}` (expected `{expected}`)")]
    UnsupportedVersion { found: String, expected: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("no scenarios left in the suite")]
    EndOfSuite,

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
