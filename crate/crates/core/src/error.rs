use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to decode image {path}: {source}")]
    Decode {
        path: PathBuf,
        source: image::ImageError,
    },

    #[error("unsupported image format: {path}")]
    UnsupportedFormat { path: PathBuf },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("class directory '{class}' contains no readable images")]
    EmptyClass { class: String },

    #[error("class '{class}' has {count} images but stratified folding needs at least {folds}")]
    Stratification {
        class: String,
        count: usize,
        folds: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("bad image shape {width}x{height}: {reason}")]
    Shape {
        width: usize,
        height: usize,
        reason: &'static str,
    },

    #[error("feature tables misaligned: {0}")]
    Alignment(String),

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value detected in {0}")]
    NonFinite(String),

    #[error("unknown {kind} '{name}'")]
    UnknownName { kind: &'static str, name: String },
}

pub type Result<T> = std::result::Result<T, Error>;
