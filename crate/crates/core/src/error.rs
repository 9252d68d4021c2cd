use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("line {line}: unknown tag `{tag}`")]
    UnknownTag { line: usize, tag: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("BIO scheme violation at position {position}: `{from}` -> `{to}`")]
    SchemeViolation {
        position: usize,
        from: String,
        to: String,
    },

    #[error("no tag path satisfies the transition constraints")]
    NoValidPath,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code for the command-line front end: 2 for data errors,
    /// 3 for numeric failures. Usage errors (1) are raised by argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite(_) | Error::Numeric(_) => 3,
            _ => 2,
        }
    }
}
