//! Error type carrying the process exit code: 2 for configuration
//! problems, 3 for numerical failures, 4 for I/O.

use std::fmt;

use dpasr_core::autodiff::AutodiffError;
use dpasr_core::datasets::DatasetError;
use dpasr_core::model::ModelError;
use dpasr_core::optimizer::TrainError;
use dpasr_core::pruner::PruneError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        CliError::Numeric(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Io(msg) => write!(f, "I/O error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match &e {
            DatasetError::Io(_) => CliError::io(e.to_string()),
            DatasetError::NoConvergence { .. } => CliError::numeric(e.to_string()),
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match &e {
            TrainError::Diverged { .. } => CliError::numeric(e.to_string()),
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<PruneError> for CliError {
    fn from(e: PruneError) -> Self {
        match &e {
            PruneError::Train(TrainError::Diverged { .. }) | PruneError::Metrics(_) => {
                CliError::numeric(e.to_string())
            }
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<AutodiffError> for CliError {
    fn from(e: AutodiffError) -> Self {
        CliError::numeric(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match &e {
            ModelError::Io(_) => CliError::io(e.to_string()),
            _ => CliError::config(e.to_string()),
        }
    }
}
