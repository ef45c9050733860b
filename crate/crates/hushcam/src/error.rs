use std::path::PathBuf;

use hushcam_core::Error as CoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a raster could not be decoded.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("unrecognised container (leading bytes {0:02x?})")]
    UnknownContainer(Vec<u8>),
    #[error("unsupported netpbm variant {0}")]
    UnsupportedVariant(String),
    #[error("unsupported channel count {0} (single-channel grayscale only)")]
    UnsupportedChannels(u8),
    #[error("unsupported bit depth {0} (8 or 16 only)")]
    UnsupportedBitDepth(u32),
    #[error("maxval {0} outside 1..=65535")]
    BadMaxval(u32),
    #[error("malformed header: {0}")]
    MalformedHeader(&'static str),
    #[error("pixel data truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("png: {0}")]
    Png(String),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: DecodeError,
    },
    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{failed} items failed")]
    Partial { failed: usize },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// 0 success, 1 configuration, 2 data, 3 partial failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 1,
            Error::Core(
                CoreError::InvalidConfig(_)
                | CoreError::InvalidMeasurementCount { .. }
                | CoreError::InvalidFolds { .. }
                | CoreError::UnknownWavelet(_)
                | CoreError::LevelOutOfRange { .. }
                | CoreError::NotPowerOfTwo(_),
            ) => 1,
            Error::Partial { .. } => 3,
            _ => 2,
        }
    }
}

/// One input that could not be processed; the batch goes on without it.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ItemFailure {
    pub item: String,
    pub reason: String,
}

impl ItemFailure {
    pub fn new(item: impl Into<String>, reason: impl ToString) -> Self {
        Self {
            item: item.into(),
            reason: reason.to_string(),
        }
    }
}
