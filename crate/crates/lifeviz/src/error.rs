use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition (bad shape, zero count, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Tensor shapes do not conform for the requested operation.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    /// An operation required state that was not set up (missing gradients,
    /// uninitialized discriminator, untrained backbone).
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A file did not conform to one of the on-disk formats.
    #[error("format error: {0}")]
    Format(String),

    /// A configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            got: got.into(),
        }
    }
}
