use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by kernel evaluation, the solvers and the data pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point component {index} = {value} lies outside the box [{lower}, {upper}]")]
    OutsideBox {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid box: lower bound {lower} is not below upper bound {upper} in dimension {index}")]
    InvalidBox { index: usize, lower: f64, upper: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e}, tolerance {tol:e})")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("both classes are required, found only label {0}")]
    SingleClass(f64),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("missing values in rows {0:?}")]
    MissingValues(Vec<usize>),

    #[error("non-numeric value {value:?} in row {row}, column {column}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("label column {0:?} not found")]
    LabelColumn(String),

    #[error("unsupported model format version {found} (expected {expected})")]
    FormatVersion { found: u64, expected: u64 },

    #[error("corrupted model file: {0}")]
    Corrupted(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotSymmetric(_) | Error::NotPsd { .. } | Error::SingleClass(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
