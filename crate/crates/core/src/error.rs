use std::path::PathBuf;

/// Errors produced by the fabba library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty sequence")]
    EmptySequence,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("series too short: need at least {required} values, got {actual}")]
    SeriesTooShort { required: usize, actual: usize },

    #[error("invalid piece at index {index}: length must be at least 1")]
    InvalidPiece { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("label {label} out of range for {groups} groups")]
    LabelOutOfRange { label: usize, groups: usize },

    #[error("unknown symbol {0}")]
    UnknownSymbol(u32),

    #[error("cannot quantize {pieces} pieces into a total length of {target}")]
    CannotQuantize { pieces: usize, target: usize },

    #[error("problem {problem} has no non-failing solver")]
    AllSolversFailed { problem: String },

    #[error("unsupported PPM variant `{0}`")]
    UnsupportedPpmVariant(String),

    #[error("unsupported maxval {0}")]
    UnsupportedMaxval(u32),

    #[error("malformed PPM header: {0}")]
    MalformedHeader(String),

    #[error("truncated data: expected {expected} pixel bytes, got {actual}")]
    TruncatedData { expected: usize, actual: usize },

    #[error("parse error in {path}, line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("model format error: {0}")]
    Model(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
