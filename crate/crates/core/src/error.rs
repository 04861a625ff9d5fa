use std::path::PathBuf;

use crate::model::Crs;

/// Errors raised by the geoveil library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line that is not valid JSON.
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },

    /// A well-formed record that violates the record schema or a type invariant.
    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("coordinate reference mismatch: expected {expected:?}, found {found:?}")]
    CrsMismatch { expected: Crs, found: Crs },

    #[error("metrics undefined for empty report set")]
    EmptyReportSet,

    #[error("fingerprint profile must not be empty")]
    EmptyFingerprint,

    #[error("scan at t={got} arrives before previous scan at t={previous}")]
    OutOfOrderScan { previous: i64, got: i64 },

    #[error("POI index is empty; refusing to submit the raw location without the allow-raw override")]
    EmptyPoiIndex,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for errors caused by bad input or flags, as opposed to internal failures
    /// such as a failed write.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Csv(_) | Error::Json(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
