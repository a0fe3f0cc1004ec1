use std::path::PathBuf;

use condbench_core::Error as CoreError;

/// Errors of the workbench layer, each with a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad spec or parameter; `pointer` is a JSON pointer into the spec when known.
    #[error("{}{message}", pointer.as_deref().map(|p| format!("{p}: ")).unwrap_or_default())]
    Validation { pointer: Option<String>, message: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Validation { pointer: None, message: message.into() }
    }

    pub fn at(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation { pointer: Some(pointer.into()), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 validation, 3 convergence or numerical failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e.root() {
                CoreError::Convergence(_) | CoreError::Numeric(_) => 3,
                _ => 2,
            },
        }
    }
}
