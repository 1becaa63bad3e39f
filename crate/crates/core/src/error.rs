use thiserror::Error;

use crate::types::{MessageId, PersonId};

/// Errors surfaced by the engine and its subsystems.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("validation: {0}")]
    Validation(String),

    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("message {0} is already indexed")]
    DuplicateMessageId(MessageId),

    #[error("unknown message id {0}")]
    UnknownMessageId(MessageId),

    #[error("unknown person {0}")]
    UnknownPerson(PersonId),

    #[error("relationship endpoints resolve to the same person")]
    SelfEdge,

    #[error("person {0} was merged away; operate on the live node")]
    Tombstone(PersonId),

    #[error("expected {expected} frame votes, got {got}")]
    VoteCount { expected: usize, got: usize },

    #[error("embedder: {0}")]
    Embedder(String),

    #[error("language model: {0}")]
    Model(String),

    #[error("vision client: {0}")]
    Vision(String),

    #[error("extractor: {0}")]
    Extractor(String),

    #[error("snapshot schema version {0} is not supported")]
    UnsupportedSchema(u32),

    #[error("store corrupt: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CoreError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CoreError::Validation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
