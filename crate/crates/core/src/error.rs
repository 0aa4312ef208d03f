use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed ring at index {index}: {reason}")]
    MalformedRing { index: usize, reason: String },

    #[error("image {image}: polygon {index}: {reason}")]
    Annotation {
        image: String,
        index: usize,
        reason: String,
    },

    #[error("seed label {label} at pixel ({row}, {col}) lies outside the region")]
    SeedOutsideRegion { label: u32, row: usize, col: usize },

    #[error("inconsistent match: {0}")]
    InconsistentMatch(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(expected: (usize, usize), actual: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            expected: format!("{}x{}", expected.0, expected.1),
            actual: format!("{}x{}", actual.0, actual.1),
        }
    }
}
