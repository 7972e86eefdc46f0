use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by all codec modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value does not fit in the requested bit width (caller bug).
    #[error("value {value} does not fit in {count} bits")]
    ValueOutOfRange { value: u64, count: u32 },

    /// A read ran past the end of the stream.
    #[error("truncated stream: {0}")]
    TruncatedStream(String),

    /// The stream is long enough but its contents are not decodable.
    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    /// A level lies outside the range representable by the binarization.
    #[error("level {0} outside representable range")]
    LevelRange(i64),

    /// Invalid caller-supplied data (shapes, non-finite values, bad params).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Stream does not start with the container magic.
    #[error("bad magic: not a DCBC stream")]
    BadMagic,

    /// Container version not understood by this build.
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),

    /// NPY file could not be ingested.
    #[error("npy {path}: {reason}")]
    Npy { path: PathBuf, reason: String },

    /// Manifest file could not be parsed or references missing files.
    #[error("manifest: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn truncated(msg: impl Into<String>) -> Self {
        Error::TruncatedStream(msg.into())
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::CorruptStream(msg.into())
    }
}
