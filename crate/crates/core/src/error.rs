use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed line {line}")]
    Malformed { line: usize },
    #[error("duplicate or non-increasing feature index {index} on line {line}")]
    NonIncreasingIndex { line: usize, index: usize },
    #[error("label {label} outside {{-1, 0, +1}} on line {line}")]
    BadLabel { label: f64, line: usize },
    #[error("entry ({row}, {col}) out of range for {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("duplicate entry in row {row}")]
    DuplicateEntry { row: usize },
    #[error("non-finite value at ({row}, {col})")]
    NonFiniteValue { row: usize, col: usize },
    #[error("{labels} labels for {rows} rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("column override {requested} smaller than max observed index {observed}")]
    ColsOverrideTooSmall { requested: usize, observed: usize },
    #[error("density {density} not in (0, 1]")]
    BadDensity { density: f64 },
    #[error("n_informative {n_informative} exceeds d = {d}")]
    TooManyInformative { n_informative: usize, d: usize },
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dimension mismatch: weight length {weights}, features {features}")]
    DimensionMismatch { weights: usize, features: usize },
    #[error("non-finite gradient at iteration {iteration}")]
    NonFiniteGradient { iteration: usize },
    #[error("selector {selector:?} requires {required:?} mode")]
    SelectorModeMismatch {
        selector: crate::fast::SelectorKind,
        required: crate::trainer::Mode,
    },
    #[error("invalid privacy parameters: {0}")]
    BadPrivacyParams(String),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dimension mismatch: weight length {weights}, features {features}")]
    DimensionMismatch { weights: usize, features: usize },
    #[error("AUC undefined: all labels belong to one class")]
    SingleClass,
}
