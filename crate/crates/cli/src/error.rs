use std::path::{Path, PathBuf};

use thiserror::Error;
use tppi_core::allocation::AllocationError;
use tppi_core::analysis::AnalysisError;
use tppi_core::ingest::IngestError;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: file not found", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: IngestError },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Allocation(#[from] AllocationError),
    #[error("missing model: {0}")]
    MissingModel(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_)
            | CliError::MissingFile(_)
            | CliError::Input { .. }
            | CliError::Io { .. } => EXIT_INPUT,
            CliError::Analysis(_) | CliError::Allocation(_) | CliError::MissingModel(_) => {
                EXIT_INFEASIBLE
            }
        }
    }

    pub fn io(path: &Path, err: impl ToString) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}
