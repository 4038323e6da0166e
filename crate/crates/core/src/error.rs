use std::fmt;
use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Why a single record could not be parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineErrorKind {
    /// The record has fewer tab-separated columns than the schema needs.
    WrongColumnCount {
        needed: usize,
        found: usize,
    },
    /// The timestamp column is not a base-10 integer.
    NonIntegerTimestamp(String),
    NegativeTimestamp(i64),
}

impl fmt::Display for LineErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineErrorKind::WrongColumnCount { needed, found } => {
                write!(
                    f,
                    "wrong column count: need at least {needed}, found {found}"
                )
            }
            LineErrorKind::NonIntegerTimestamp(raw) => {
                write!(f, "non-integer timestamp {raw:?}")
            }
            LineErrorKind::NegativeTimestamp(ts) => write!(f, "negative timestamp {ts}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: LineErrorKind },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("{key} {message}")]
    Config { key: String, message: String },

    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 1 usage, 2 data, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 1,
            Error::Parse { .. } | Error::InvalidInput(_) => 2,
            Error::File { .. } | Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
