use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HgprError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HgprError {
    #[error("matrix of dimension {dim} is not positive definite (last jitter tried: {jitter:e})")]
    NotPositiveDefinite { dim: usize, jitter: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite value in {field} of observation {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("group {label:?} has no observations")]
    EmptyGroup { label: String },

    #[error("dataset is not in canonical order")]
    NonCanonical,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("group {label:?} has no {side} observations inside the window [{lower}, {upper}]")]
    UnidentifiableWindow {
        label: String,
        side: &'static str,
        lower: f64,
        upper: f64,
    },

    #[error("chain is empty")]
    EmptyChain,

    #[error("need at least {needed} draws, found {found}")]
    TooFewDraws { needed: usize, found: usize },

    #[error("{path}: missing required column {column:?}")]
    MissingColumn { path: PathBuf, column: &'static str },

    #[error("{path}: duplicate column {column:?}")]
    DuplicateColumn { path: PathBuf, column: String },

    #[error("{path}: no valid rows ({rejected} rejected)")]
    NoValidRows { path: PathBuf, rejected: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl HgprError {
    /// Short machine-parseable category, used as the CLI error prefix.
    pub fn category(&self) -> &'static str {
        match self {
            HgprError::NotPositiveDefinite { .. } => "numerical",
            HgprError::DimensionMismatch { .. } | HgprError::NonCanonical => "internal",
            HgprError::EmptyDataset
            | HgprError::NonFinite { .. }
            | HgprError::EmptyGroup { .. }
            | HgprError::UnidentifiableWindow { .. } => "data",
            HgprError::InvalidParameter(_) | HgprError::InvalidConfig(_) => "config",
            HgprError::EmptyChain | HgprError::TooFewDraws { .. } => "inference",
            HgprError::MissingColumn { .. }
            | HgprError::DuplicateColumn { .. }
            | HgprError::NoValidRows { .. }
            | HgprError::Csv { .. } => "input",
            HgprError::Io { .. } | HgprError::Json { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HgprError::Io {
            path: path.into(),
            source,
        }
    }
}
