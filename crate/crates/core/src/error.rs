use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{count} event(s) outside the {width}x{height} sensor at indices {indices:?}")]
    OutOfBounds {
        width: u16,
        height: u16,
        count: usize,
        /// First offending indices (capped) in the caller's input order.
        indices: Vec<usize>,
    },

    #[error("event {index} has polarity {value}; expected -1 or +1")]
    InvalidPolarity { index: usize, value: i8 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("timestamp {t} us outside [{start}, {end}] us")]
    OutOfRange { t: u64, start: u64, end: u64 },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dataset: {0}")]
    Dataset(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn arg(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by file contents or the file system rather than
    /// by how the library was called.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format { .. } | Error::Io { .. } | Error::Dataset(_) | Error::OutOfBounds { .. }
        )
    }
}
