use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("`{field}` is empty")]
    EmptySignal { field: String },

    #[error("`{field}` has length {found}, expected {expected}")]
    LengthMismatch {
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("`{field}` has sample rate {found} Hz, expected {expected} Hz")]
    SampleRateMismatch {
        field: String,
        expected: u32,
        found: u32,
    },

    #[error("`{field}` has a non-finite sample at index {index}")]
    NonFinite { field: String, index: usize },

    #[error("sample rate must be positive")]
    ZeroSampleRate,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("`{field}` has zero energy, cannot reach a finite target level")]
    ZeroEnergy { field: String },

    #[error("wav {path}: {reason}")]
    Wav { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {reason}")]
    Format { context: String, reason: String },

    #[error("enhancement failed: {0}")]
    Enhancement(String),

    #[error("linear algebra: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input data rather than bad usage or a bug.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidParameter { .. } | Error::Numerical(_))
    }
}
