use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot write `{path}`: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: ks_core::Error,
    },
    #[error("run `{run_id}` failed: {source}")]
    Run {
        run_id: String,
        #[source]
        source: ks_core::Error,
    },
    #[error("{failed} of {total} sweep runs failed")]
    Sweep { failed: usize, total: usize },
}

impl CliError {
    /// 0 success, 2 configuration or output error, 3 solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Output { .. } => 2,
            Self::Run { .. } | Self::Sweep { .. } => 3,
        }
    }
}

impl From<ks_core::Error> for CliError {
    fn from(e: ks_core::Error) -> Self {
        Self::Config(e.to_string())
    }
}
