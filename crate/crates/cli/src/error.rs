use std::path::PathBuf;

use prodcoef::ErrorKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] prodcoef::Error),
    /// A core error tied to the file it came from.
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: prodcoef::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn input(path: impl Into<PathBuf>) -> impl FnOnce(prodcoef::Error) -> Self {
        let path = path.into();
        move |source| CliError::Input { path, source }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 1 validation, 2 I/O, 3 data consistency.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) | CliError::Input { source: e, .. } => match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Io => 2,
                ErrorKind::DataConsistency => 3,
            },
            CliError::Io { .. } => 2,
            CliError::Json { .. } => 3,
            CliError::Usage(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
