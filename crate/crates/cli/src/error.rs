use serde::Serialize;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error{}: {message}", position(*line, *column))]
    Parse { line: Option<usize>, column: Option<usize>, message: String },

    #[error("invalid `{field}`: expected {allowed}, got {got}")]
    Validation { field: String, allowed: String, got: String },

    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Compute(#[from] jjline::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{failed} of {total} properties failed")]
    VerifyFailed { failed: usize, total: usize },
}

fn position(line: Option<usize>, column: Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" at line {l}, column {c}"),
        _ => String::new(),
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Validation { .. } => "validation",
            CliError::UnknownKeys(_) => "unknown-keys",
            CliError::Io { .. } => "io",
            CliError::Compute(_) => "compute",
            CliError::Usage(_) => "usage",
            CliError::VerifyFailed { .. } => "verify-failed",
        }
    }

    /// Process exit status: 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::UnknownKeys(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (line, column, field, path) = match self {
            CliError::Parse { line, column, .. } => (*line, *column, None, None),
            CliError::Validation { field, .. } => (None, None, Some(field.clone()), None),
            CliError::Io { path, .. } => (None, None, None, Some(path.display().to_string())),
            _ => (None, None, None, None),
        };
        ErrorRecord { error: self.kind(), message: self.to_string(), line, column, field, path }
    }
}

/// What a failing run prints to stderr as one JSON line.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}
