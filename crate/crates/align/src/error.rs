use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("cannot align empty series set")]
    EmptySet,
    #[error("series have different dimensionality: {a} vs {b}")]
    DimensionalityMismatch { a: usize, b: usize },
    #[error("multiple alignment needs at least 2 series, got {0}")]
    SetTooSmall(usize),
    #[error("dataset {dataset} has no member of class {class}")]
    EmptyClass { dataset: String, class: usize },
    #[error("dataset {0} not present in the similarity matrix")]
    UnknownDataset(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("malformed similarity csv: {0}")]
    BadCsv(String),
}

pub type Result<T> = std::result::Result<T, AlignError>;
