use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("{0}: backward called without a cached forward pass")]
    MissingCache(&'static str),

    #[error("dropout rate {0} outside [0, 1)")]
    InvalidRate(f64),

    #[error("binary label must be 0 or 1, got {0}")]
    InvalidLabel(f64),

    #[error("class index {index} out of range for {classes} classes")]
    IndexOutOfRange { index: usize, classes: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("missing column `{column}`{}", .file.as_ref().map(|f| format!(" in {}", f.display())).unwrap_or_default())]
    MissingColumn { column: String, file: Option<PathBuf> },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("class `{class}` has {rows} row(s); at least 2 are needed for a stratified split")]
    ClassTooSmall { class: String, rows: usize },

    #[error("requested top-{k} features but only {available} are available")]
    KTooLarge { k: usize, available: usize },

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("corrupt dataset cache: {0}")]
    CorruptCache(String),

    #[error("mode mismatch: model is `{model}`, data is `{data}`")]
    ModeMismatch { model: String, data: String },

    #[error("non-finite loss at epoch {epoch} (last good epoch: {last_good})", last_good = .last_good.map(|e| e.to_string()).unwrap_or_else(|| "none".into()))]
    NonFiniteLoss { epoch: usize, last_good: Option<usize> },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> Error {
    Error::ShapeMismatch {
        op,
        detail: detail.into(),
    }
}
