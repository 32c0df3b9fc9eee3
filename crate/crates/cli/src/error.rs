use std::path::PathBuf;

/// Process exit codes. Pass/fail is signalled only through these.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    /// Config schema or usage error.
    pub const CONFIG: i32 = 2;
    /// Numerical or parameter error during a run.
    pub const COMPUTE: i32 = 3;
    /// A soundness check failed.
    pub const SOUNDNESS: i32 = 4;
    /// Some other check failed under `--strict`.
    pub const CHECK: i32 = 5;
    /// `verify` found a mismatch.
    pub const VERIFY: i32 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: invalid config at `{field}`: {message}")]
    Config { path: PathBuf, field: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] gap_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => exit::CONFIG,
            CliError::Compute(_) => exit::COMPUTE,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => exit::IO,
            CliError::Verify(_) => exit::VERIFY,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
