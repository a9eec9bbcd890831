use std::path::PathBuf;

use thiserror::Error;
use workbench_core::{HubError, StoreError};
use workbench_docpipe::DocError;
use workbench_geom::StepError;
use workbench_synth::SynthError;
use workbench_verify::DslError;

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("{}: line {line}: {source}", path.display())]
    Constraint {
        path: PathBuf,
        line: usize,
        #[source]
        source: DslError,
    },
    #[error("{}: {source}", path.display())]
    Step {
        path: PathBuf,
        #[source]
        source: StepError,
    },
    #[error("design sheet: {0}")]
    Design(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Hub(#[from] HubError),
    #[error(transparent)]
    Doc(#[from] DocError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl WorkflowError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WorkflowError::Io {
            path: path.into(),
            source,
        }
    }
}
