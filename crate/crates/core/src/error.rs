use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncated header")]
    TruncatedHeader,

    #[error("bad magic tag")]
    BadMagic,

    #[error("corrupt header: {0}")]
    CorruptHeader(String),

    #[error("truncated record {instance_id}")]
    TruncatedRecord { instance_id: u64 },

    #[error("corrupt record {instance_id}: {reason}")]
    CorruptRecord { instance_id: u64, reason: String },

    #[error("short read at offset {offset}: wanted {wanted} bytes, file has {available}")]
    ShortRead {
        offset: u64,
        wanted: u64,
        available: u64,
    },

    #[error("dimension mismatch: model has {expected} features, record has {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training diverged at epoch {epoch}: objective {objective}")]
    Diverged { epoch: usize, objective: f64 },

    #[error("malformed device profile: {0}")]
    Profile(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
