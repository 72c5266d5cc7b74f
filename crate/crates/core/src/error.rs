use std::io;

use thiserror::Error;

pub type Result<T, E = QuantError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QuantError {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("series {index} has length {found}, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("feature matrix has {found} columns, model expects {expected}")]
    ColumnMismatch { expected: usize, found: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("not a model file (bad magic bytes)")]
    BadMagic,

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("model file truncated: {0}")]
    Truncated(String),

    #[error("model checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    #[error("results do not cover the same keys; missing: {}", .0.join(", "))]
    KeyMismatch(Vec<String>),

    #[error(transparent)]
    Io(#[from] io::Error),
}
