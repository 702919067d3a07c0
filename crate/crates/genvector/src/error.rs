//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by configuration validation, file ingestion, and the
/// inference pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corpus parse error at line {line}: {message}")]
    CorpusParse { line: usize, message: String },

    #[error("duplicate user id {0:?} in corpus")]
    DuplicateUser(String),

    #[error("empty document for user {0:?}; every user needs at least one concept token")]
    EmptyDocument(String),

    #[error("embedding file error: {0}")]
    EmbeddingParse(String),

    #[error("embedding for token {0:?} missing from file")]
    MissingEmbedding(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("sufficient statistics are in an invalid state: {0}")]
    InvalidStats(String),

    #[error("non-finite value in {0}; precision parameters likely blew up")]
    NonFinite(&'static str),

    #[error("unknown user {0:?}")]
    UnknownUser(String),

    #[error("unknown concept {0:?}")]
    UnknownConcept(String),

    #[error("model snapshot error: {0}")]
    Snapshot(String),

    #[error("snapshot format version {found} unsupported (expected {expected})")]
    SnapshotVersion { found: u32, expected: u32 },

    #[error("no evaluable users: every truth set is empty")]
    NoEvaluableUsers,

    #[error("synthetic generation failed: {0}")]
    Synth(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
