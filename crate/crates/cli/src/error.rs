use std::path::Path;
use std::process::ExitCode;

use evlab_core::EvlabError;

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_QUALITY: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Model(EvlabError),
    /// A simulation that ran but cannot support its own measurement.
    #[error("simulation quality: {0}")]
    Quality(EvlabError),
    #[error("thread pool: {0}")]
    Threads(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Quality(_) => ExitCode::from(EXIT_QUALITY),
            _ => ExitCode::from(EXIT_IO),
        }
    }
}

impl From<EvlabError> for CliError {
    fn from(e: EvlabError) -> Self {
        match e {
            EvlabError::NotSteady { .. } | EvlabError::NoOneOverECrossing { .. } => CliError::Quality(e),
            other => CliError::Model(other),
        }
    }
}
