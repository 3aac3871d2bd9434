use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by detectors, transforms, calibrators, metrics and streams.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SadError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input value at position {position}")]
    NonFiniteInput { position: usize },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("empty input")]
    EmptyInput,

    #[error("label must be 0 or 1, got {0}")]
    BadLabel(i64),

    #[error("metric undefined: {positives} positive and {negatives} negative labels")]
    MetricUndefined { positives: usize, negatives: usize },

    #[error("io error on {path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("line {line}: {message}")]
    RowParse { line: u64, message: String },

    #[error("state serialization: {0}")]
    Serialization(String),

    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<SadError>,
    },
}

impl SadError {
    pub fn bad_parameter(msg: impl Into<String>) -> Self {
        SadError::BadParameter(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        SadError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

/// Failure inside a batch call (`fit`, `score`, `fit_score`).
///
/// `scores` holds whatever was produced for instances `0..index` before the
/// failure; it is empty for `fit`.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("instance {index}: {source}")]
pub struct BatchError {
    pub index: usize,
    pub scores: Vec<f64>,
    #[source]
    pub source: SadError,
}

pub type Result<T, E = SadError> = std::result::Result<T, E>;

/// Rejects NaN and infinities, reporting the first offending coordinate.
pub fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(position) => Err(SadError::NonFiniteInput { position }),
        None => Ok(()),
    }
}
