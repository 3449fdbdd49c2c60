//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Channel lengths cannot be aligned within the allowed slack.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// Input data violates a documented invariant.
    #[error("invalid input: {0}")]
    Validation(String),

    /// Tensor or table shapes are inconsistent.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A configuration value is out of its documented range.
    #[error("invalid config: {0}")]
    Config(String),

    /// A forward or backward pass produced NaN or Inf.
    #[error("non-finite value produced by {op}")]
    NumericHealth { op: &'static str },

    /// Training requires both classes to be present.
    #[error("single-class input: {0}")]
    SingleClass(String),

    /// Failure while training, with epoch/batch context.
    #[error("training failed at epoch {epoch}, batch {batch}: {source}")]
    Training {
        epoch: usize,
        batch: usize,
        #[source]
        source: Box<Error>,
    },

    /// Checkpoint or record container could not be decoded.
    #[error("corrupt or incompatible file: {0}")]
    Format(String),

    /// Text input could not be parsed.
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
