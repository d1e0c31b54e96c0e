use std::path::PathBuf;

use thiserror::Error;

/// Failures of the experiment runner and CLI.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] adasi_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 3 for a degenerate
    /// test statistic, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use adasi_core::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::Json { .. } => 2,
            HarnessError::Core(E::InvalidArgument(_) | E::InvalidProbability(_)) => 2,
            HarnessError::Core(
                E::DegenerateStatistic(_) | E::DegenerateSplit(_) | E::SingularDesign(_),
            ) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
