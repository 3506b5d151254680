use thiserror::Error;

/// Errors raised by tensor construction and tape operations.
#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch on axis `{axis}`: expected {expected}, got {actual}")]
    ShapeMismatch {
        axis: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("expected a rank-{expected} tensor, got shape {shape:?}")]
    BadRank { expected: usize, shape: Vec<usize> },
    #[error("shape {shape:?} has {numel} elements but {len} values were provided")]
    BadLength {
        shape: Vec<usize>,
        numel: usize,
        len: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("backward requires a scalar loss node, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("batch of size 0")]
    EmptyBatch,
    #[error("label index {index} out of range for {classes} classes")]
    LabelOutOfRange { index: usize, classes: usize },
}

pub type Result<T> = std::result::Result<T, TensorError>;
