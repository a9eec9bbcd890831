use thiserror::Error;
use workbench_core::{HubError, Uid};

#[derive(Debug, Error)]
pub enum DocError {
    #[error("document is not valid UTF-8 (first bad byte at offset {offset})")]
    InvalidEncoding { offset: usize },
    #[error("document has no non-whitespace content")]
    EmptyDocument,
    #[error("unknown document {0}")]
    DanglingDocument(Uid),
    #[error("extractor adapter failed: {0}")]
    Adapter(String),
    #[error("no recorded response for request digest {0}")]
    ReplayMiss(String),
    #[error("invalid lexicon: {0}")]
    Lexicon(String),
    #[error(transparent)]
    Hub(#[from] HubError),
}
