use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("matrix contains a non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("numerical failure: {operation} did not converge on a {rows}x{cols} matrix")]
    NumericalFailure {
        operation: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid configuration `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("resource limit exceeded: {what} needs {required} bytes, limit is {limit} bytes")]
    Resource {
        what: String,
        required: u64,
        limit: u64,
    },

    #[error("{path}: parse error at row {row}, column {col}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        message: String,
    },

    #[error("unknown class `{label}`; known classes: {known:?}")]
    UnknownClass { label: String, known: Vec<String> },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("bad magic at byte {offset}: expected {expected:02x?}, found {found:02x?}")]
    BadMagic {
        offset: u64,
        expected: Vec<u8>,
        found: Vec<u8>,
    },

    #[error("unsupported model file version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("truncated input at byte {offset}: needed {needed} more bytes")]
    Truncated { offset: u64, needed: u64 },

    #[error(
        "checksum mismatch at byte {offset}: stored {stored:#010x}, computed {computed:#010x}"
    )]
    Checksum {
        offset: u64,
        stored: u32,
        computed: u32,
    },

    #[error("subsystem {index} failed: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("metadata: {0}")]
    Metadata(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
