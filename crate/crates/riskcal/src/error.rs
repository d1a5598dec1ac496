//! Error type shared by the whole crate.

use thiserror::Error;

/// Coarse failure class, used by callers (e.g. the CLI) to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed inputs, contract violations, undefined metrics.
    Validation,
    /// Network / endpoint failures.
    Transport,
    /// Evaluation-protocol violations (e.g. RIF overlap between train and OOD).
    Protocol,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("instance {id}: confidence values must sum to 1 within {tolerance} (got {sum})")]
    ConfidenceSum { id: String, sum: f64, tolerance: f64 },

    #[error("instance {id}: confidence value {value} at position {index} is not in [0, 1]")]
    ConfidenceValue { id: String, index: usize, value: f64 },

    #[error("instance {id}: invalid instance: {reason}")]
    InvalidInstance { id: String, reason: String },

    #[error("benchmark {name}: {reason}")]
    InvalidBenchmark { name: String, reason: String },

    #[error("instance {instance_id} has {expected} choices but confidence set has {got} values")]
    CardinalityMismatch { instance_id: String, expected: usize, got: usize },

    #[error("instance id {instance_id} does not match confidence set id {confidence_id}")]
    IdMismatch { instance_id: String, confidence_id: String },

    #[error("{op} requires an unambiguous instance, but {id} is ambiguous")]
    AmbiguousInstance { id: String, op: &'static str },

    #[error("{op} requires unambiguous records, but record {id} is ambiguous")]
    AmbiguousRecord { id: String, op: &'static str },

    #[error("donor {donor_id} rejected for instance {id}: {reason}")]
    DonorRejected { id: String, donor_id: String, reason: String },

    #[error("benchmark {name} has {len} instances; at least 2 are required to sample donors")]
    BenchmarkTooSmall { name: String, len: usize },

    #[error("training labels are single-class; a decision rule fit on them would be degenerate")]
    SingleClassLabels,

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("missing confidence sets for {} instance(s): {}", ids.len(), ids.join(", "))]
    MissingConfidences { ids: Vec<String> },

    #[error("no stored embedding for text digest {digest}")]
    MissingEmbedding { digest: String },

    #[error("feature extraction failed for instance {instance_id}: {source}")]
    FeatureExtraction {
        instance_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("cosine similarity undefined for a zero-norm vector")]
    ZeroNormVector,

    #[error("{metric} is undefined: {reason}")]
    UndefinedMetric { metric: &'static str, reason: String },

    #[error("{what} must be non-empty")]
    EmptyInput { what: &'static str },

    #[error("{path}:{line}: {reason}")]
    FileFormat { path: String, line: usize, reason: String },

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("checksum mismatch in {path}: file is corrupt or was tampered with")]
    ChecksumMismatch { path: String },

    #[error("transport failure after {attempts} attempt(s): {reason}")]
    Transport { attempts: u32, reason: String },

    #[error("authentication failed against {endpoint}: {reason}")]
    Auth { endpoint: String, reason: String },

    #[error("evaluation protocol violation: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Classifies the error for exit-code mapping.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Transport { .. } | Error::Auth { .. } => ErrorClass::Transport,
            Error::Protocol(_) => ErrorClass::Protocol,
            _ => ErrorClass::Validation,
        }
    }
}
