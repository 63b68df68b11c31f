use thiserror::Error;

/// Errors produced by the spectral operators, codecs and generators.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor dimensions are invalid or inconsistent between operands.
    #[error("shape error: {0}")]
    Shape(String),

    /// A numeric argument is out of its admissible domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Non-finite values were found where finite values are required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A file or byte stream does not follow the expected format.
    #[error("format error: {0}")]
    Format(String),

    /// An optimization run produced a non-finite loss.
    #[error("divergence at step {step}: loss = {loss}")]
    Divergence { step: usize, loss: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
