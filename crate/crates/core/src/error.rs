use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation was called with arguments that break its shape or value contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A loss or gradient went NaN/Inf.
    #[error("numerical failure at iteration {iteration}: {detail}")]
    NonFinite { iteration: usize, detail: String },

    /// Checkpoint bytes could not be decoded.
    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for this error: 1 usage, 2 I/O, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) | Error::Unsupported(_) | Error::Config(_) => 1,
            Error::Io { .. } | Error::Image { .. } | Error::Format(_) => 2,
            Error::NonFinite { .. } => 3,
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
