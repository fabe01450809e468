use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad argument or configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record or dataset line failed to parse or violated a structural rule.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate record for sample {id}, epoch {epoch}")]
    DuplicateEpoch { id: String, epoch: u32 },

    #[error("sample {id} is missing epochs (saw {seen:?}, expected 1..={expected})")]
    MissingEpochs {
        id: String,
        seen: Vec<u32>,
        expected: u32,
    },

    /// Structurally valid input that cannot be processed (empty, ragged, out of range).
    #[error("invalid data: {0}")]
    Data(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::NonFinite { .. } => 3,
            _ => 2,
        }
    }
}
