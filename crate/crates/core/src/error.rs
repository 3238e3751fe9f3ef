//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Failures raised while turning RR intervals into features.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("series too short: {0}")]
    TooShort(String),
    #[error("every beat was rejected as an artifact")]
    AllArtifacts,
    #[error("invalid interval at index {index}: {value}")]
    InvalidInterval { index: usize, value: f64 },
    #[error("spectrum unavailable: {0}")]
    SpectrumUnavailable(String),
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Failures raised by dual z-score normalization and baseline construction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("zero standard deviation for {0}")]
    ZeroSigma(String),
    #[error("baseline value is zero; percent change undefined for {0}")]
    BaselineZero(String),
    #[error("insufficient history to build a baseline for subject {0}")]
    InsufficientHistory(String),
}

/// Failures raised by the knowledge base (ingest, store, retrieval).
#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("missing document {0}")]
    MissingDocument(PathBuf),
    #[error("corrupt store: {0}")]
    CorruptStore(String),
    #[error("embedding service error: {0}")]
    Embedder(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Failures raised by a completion backend.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompletionError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend timed out: {0}")]
    Timeout(String),
    #[error("backend refused request: {0}")]
    BackendRefused(String),
}

impl CompletionError {
    /// Transport failures and timeouts are worth retrying; refusals are not.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Self::Transport(_) | Self::Timeout(_))
    }
}

/// Failures raised by the evaluation harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("rating out of range 1..=5: {0}")]
    OutOfRange(i64),
    #[error("no non-neutral trials to evaluate")]
    EmptyEvaluationSet,
    #[error("trial sets differ; keys only in one side: {0:?}")]
    TrialSetMismatch(Vec<String>),
    #[error("unparseable label {0:?}")]
    BadLabel(String),
}

/// Crate-level error used by ingest and the run orchestrator.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Completion(#[from] CompletionError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
