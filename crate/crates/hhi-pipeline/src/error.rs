//! Pipeline error taxonomy with process exit codes.

use std::path::PathBuf;

use hhi_core::backend::BackendError;
use serde::Serialize;
use thiserror::Error;

/// Exit code for validation/schema failures.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for backend failures.
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl PipelineError {
    pub fn validation(message: impl Into<String>) -> Self {
        PipelineError::Validation(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Backend(_) => EXIT_BACKEND,
            _ => EXIT_VALIDATION,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Io { .. } => "io",
            PipelineError::Schema { .. } => "schema",
            PipelineError::Validation(_) => "validation",
            PipelineError::Backend(_) => "backend",
        }
    }

    /// The machine-readable form printed to stderr on failure.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Wire<'a> {
            kind: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&serde_json::json!({
            "error": Wire { kind: self.kind(), message: self.to_string(), exit_code: self.exit_code() }
        }))
        .unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{}\"}}}}", self.kind()))
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;
