//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]; the CLI maps the variants onto
//! distinct process exit codes (see `cli`).

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed container/file structure (bad WAV header, bad checkpoint magic, ...).
    #[error("format error: {0}")]
    Format(String),

    /// Structurally valid file using an encoding we do not handle.
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    /// A numeric or structural precondition was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Tensor shape mismatch; names both shapes.
    #[error("shape error: expected {expected:?}, got {got:?} ({context})")]
    Shape {
        expected: Vec<usize>,
        got: Vec<usize>,
        context: String,
    },

    /// Manifest/config schema problem (missing column, bad field, ...).
    #[error("schema error: {0}")]
    Schema(String),

    /// A single manifest row failed to parse.
    #[error("row error at data row {row}: {message}")]
    Row { row: usize, message: String },

    /// Invalid model or pipeline configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Dataset-level problem (label out of range, mismatched vocabularies, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Training diverged (non-finite loss or gradient).
    #[error("training error: {0}")]
    Training(String),

    /// Forward/backward contract misuse (stale cache, mismatched layer).
    #[error("contract error: {0}")]
    Contract(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
