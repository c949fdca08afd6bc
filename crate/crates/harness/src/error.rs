//! Error type of the scenario runner, with the process exit code each
//! failure class maps to: 2 for configuration or feasibility problems,
//! 3 for optimizer failures, 1 for anything environmental.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("scenario infeasible: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Infeasible(_) => 2,
            HarnessError::Solver(_) => 3,
            HarnessError::Io { .. } => 1,
        }
    }
}

impl From<swarm_mimo::Error> for HarnessError {
    fn from(e: swarm_mimo::Error) -> Self {
        match e {
            swarm_mimo::Error::KernelDiverged { .. } => HarnessError::Solver(e.to_string()),
            swarm_mimo::Error::Infeasible { .. }
            | swarm_mimo::Error::SearchExhausted { .. }
            | swarm_mimo::Error::NotEnoughDirections { .. }
            | swarm_mimo::Error::InvalidArgument(_) => HarnessError::Infeasible(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
