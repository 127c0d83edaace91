use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported loss kind for this operation: {0}")]
    UnsupportedKind(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("noise rate {eta} outside the tolerated regime [0, {limit}) for K = {k}")]
    OutOfRegime { eta: f64, k: usize, limit: f64 },

    #[error("format error in {source_name} at {location}: {message}")]
    Format {
        source_name: String,
        location: String,
        message: String,
    },

    #[error("training diverged at epoch {epoch}, batch {batch}: {message}")]
    Divergence {
        epoch: usize,
        batch: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn format_at_offset(source_name: impl Into<String>, offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            source_name: source_name.into(),
            location: format!("byte offset {offset}"),
            message: message.into(),
        }
    }

    pub fn format_at_line(source_name: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Format {
            source_name: source_name.into(),
            location: format!("line {line}"),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 usage, 3 data/format, 4 divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format { .. } | Error::Io { .. } => 3,
            Error::Divergence { .. } => 4,
            _ => 2,
        }
    }
}
