use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("empty file: {0}")]
    EmptyFile(PathBuf),
    #[error("non-numeric cell at row {row}, column {column}: {token:?}")]
    BadCell {
        row: usize,
        column: usize,
        token: String,
    },
    #[error("row {row} has a label but no values")]
    EmptyRow { row: usize },
    #[error("series must have at least one value per dimension (dims={dims}, len={len})")]
    BadSeriesShape { dims: usize, len: usize },
    #[error("{series} series but {labels} labels")]
    LabelCountMismatch { series: usize, labels: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("series in one dataset must share dimensionality")]
    MixedDimensionality,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dimension file {file} has {rows} rows, expected {expected}")]
    DimensionRowMismatch {
        file: String,
        rows: usize,
        expected: usize,
    },
    #[error("no dimension files (dim_*.txt) found in {0}")]
    NoDimensionFiles(PathBuf),
    #[error("missing label file: {0}")]
    MissingLabels(PathBuf),
    #[error("synthetic classes {a} and {b} share the same pattern window")]
    IndistinguishableClasses { a: usize, b: usize },
    #[error("pattern window for class {class} ([{start}, {end})) exceeds length {length}")]
    WindowOutOfBounds {
        class: usize,
        start: usize,
        end: usize,
        length: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, DataError>;
