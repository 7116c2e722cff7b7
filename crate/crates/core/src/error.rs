use thiserror::Error;

use crate::corpus::Modality;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("feature vector for {modality} has length {got}, expected {expected}")]
    VocabularyMismatch {
        modality: Modality,
        got: usize,
        expected: usize,
    },

    #[error("degenerate licking day: all six block means are identical")]
    DegenerateDay,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("nothing observed: at least one modality is required")]
    NothingObserved,

    #[error("modality {0} is missing from a document")]
    MissingModality(String),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("model is not trained")]
    Untrained,

    #[error("unknown node {0}")]
    UnknownNode(String),

    #[error("unsupported architecture: {0}")]
    Unsupported(String),

    #[error("no non-zero differences in paired sample")]
    NoDifferences,

    #[error("inconsistent count tables: {0}")]
    Inconsistent(String),

    #[error("schema version mismatch: file has {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
