use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed metadata: {0}")]
    Meta(String),

    #[error("data size mismatch: expected {expected} bytes, found {found}")]
    SizeMismatch { expected: u64, found: u64 },

    #[error("unsupported bit depth {0} (expected 8 or 16)")]
    UnsupportedBitDepth(u32),

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("invalid transfer function: {0}")]
    InvalidTransferFunction(String),

    #[error("invalid partition scheme: {0}")]
    InvalidScheme(String),

    #[error("partition index {index} out of range 1..={n}")]
    PartitionIndex { index: usize, n: usize },

    #[error("acceleration structure does not match ess mode {0}")]
    AccelMismatch(&'static str),

    #[error("invalid render settings: {0}")]
    InvalidSettings(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("image encoding failed: {0}")]
    Image(String),

    #[error("invalid map file: {0}")]
    MapFormat(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
