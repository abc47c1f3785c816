use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] specpol::Error),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Encode(String),
    #[error("check failed: {0}")]
    Assert(String),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failures, 4 for failed `--assert`
    /// checks and 1 for anything environmental.
    pub fn exit_code(&self) -> u8 {
        use specpol::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(
                E::Precondition(_) | E::UnsupportedModel { .. } | E::Unsupported(_) | E::Capacity { .. },
            ) => 2,
            CliError::Core(E::Solver(_) | E::IllPosedMass { .. }) => 3,
            CliError::Assert(_) => 4,
            CliError::Io { .. } | CliError::Encode(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
