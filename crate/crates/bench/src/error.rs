//! Error type mapping failures to the CLI exit codes:
//! 0 ok, 2 i/o, 3 config/checkpoint, 4 unsupported input.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Io = 2,
    Config = 3,
    Unsupported = 4,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed file {path}: {message}")]
    Parse { path: String, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
}

impl BenchError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, message: impl ToString) -> Self {
        BenchError::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            BenchError::Io { .. } | BenchError::Parse { .. } => ExitCode::Io,
            BenchError::Config(_) => ExitCode::Config,
            BenchError::Unsupported(_) => ExitCode::Unsupported,
        }
    }
}
