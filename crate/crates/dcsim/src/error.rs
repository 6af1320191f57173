use std::path::PathBuf;

use crate::scenario::ScenarioError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("{0}")]
    Core(#[from] dcsim_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 usage/parse, 3 infeasible scenario, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Scenario(ScenarioError::Schema { .. }) => 2,
            CliError::Scenario(ScenarioError::Infeasible(_)) => 3,
            CliError::Infeasible(_) => 3,
            CliError::Core(
                dcsim_core::Error::UnknownVm(_) | dcsim_core::Error::UnknownContainer(_),
            ) => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}
