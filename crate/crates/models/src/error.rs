use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] tsc_tensor::TensorError),
    #[error("spec error: {0}")]
    Spec(String),
    #[error("architecture {arch} requires a fixed input length")]
    NeedsFixedLength { arch: &'static str },
    #[error("input has {actual} timestamps but the model was built for {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("input has {actual} dimensions but the model was built for {expected}")]
    DimsMismatch { expected: usize, actual: usize },
    #[error("missing parameter {0}")]
    MissingParameter(String),
    #[error("model file is not a TSCM file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    BadVersion(u32),
    #[error("model file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("ensemble members disagree on class count: {a} vs {b}")]
    EnsembleClassMismatch { a: usize, b: usize },
    #[error("ensemble is empty")]
    EmptyEnsemble,
}

pub type Result<T> = std::result::Result<T, ModelError>;
