use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("input file not found: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("io error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stale artifact: {0}")]
    Stale(String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error(transparent)]
    Core(#[from] abnormal_core::Error),
}

impl AppError {
    /// Process exit status: 1 usage/config, 2 data/schema, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        use abnormal_core::Error as E;
        match self {
            AppError::MissingInput(_) | AppError::Io { .. } | AppError::Config(_) => 1,
            AppError::Core(E::Parameter(_) | E::Capacity { .. }) => 1,
            AppError::Core(E::Singular { .. } | E::Numeric(_)) => 3,
            AppError::Core(_) => 2,
            AppError::Parse { .. }
            | AppError::Line { .. }
            | AppError::Schema { .. }
            | AppError::Stream(_)
            | AppError::Csv(_)
            | AppError::Json(_)
            | AppError::Stale(_)
            | AppError::Consistency(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
