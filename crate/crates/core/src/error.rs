use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MstmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MstmError {
    /// Caller supplied arguments that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("format error in {path}: {message} (at byte offset {offset})")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("load error: {0}")]
    Load(String),

    #[error("build error: {0}")]
    Build(String),

    #[error("training error at step {step}: {message}")]
    Train { step: usize, message: String },

    /// A benchmark or pipeline stage is missing one of its inputs.
    #[error("setup error: {0}")]
    Setup(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MstmError {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        MstmError::Usage(msg.into())
    }
}
