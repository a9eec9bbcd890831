use thiserror::Error;
use workbench_core::{HubError, Uid};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{0} is not a component")]
    UnknownComponent(Uid),
    #[error("{0} is not a requirement")]
    UnknownRequirement(Uid),
    #[error("malformed DSM: {0}")]
    MalformedDsm(String),
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("csv export failed: {0}")]
    Csv(String),
    #[error(transparent)]
    Hub(#[from] HubError),
}
