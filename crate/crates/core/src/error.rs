use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "invalid label {label} at sample {index} (expected a class index below {class_count})"
    )]
    InvalidLabel {
        index: usize,
        label: usize,
        class_count: usize,
    },

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("shape mismatch in {context}: {left} vs {right}")]
    Shape {
        context: &'static str,
        left: String,
        right: String,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error(
        "line search diverged at lambda = {lambda:e}: L = {lipschitz:e} exceeds the cap (last objective {objective:e})"
    )]
    Divergence {
        lambda: f64,
        lipschitz: f64,
        objective: f64,
    },

    #[error("path is empty")]
    EmptyPath,

    #[error("brute-force oracle refused: d = {dim} exceeds the limit of {max_dim}")]
    OracleTooLarge { dim: usize, max_dim: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn shape_error(
    context: &'static str,
    left: (usize, usize),
    right: (usize, usize),
) -> Error {
    Error::Shape {
        context,
        left: format!("{}x{}", left.0, left.1),
        right: format!("{}x{}", right.0, right.1),
    }
}
