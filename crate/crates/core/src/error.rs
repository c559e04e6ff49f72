use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chat parse error at line {line}: {message}")]
    ChatParse { line: usize, message: String },
    #[error("empty chat file")]
    EmptyChat,
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("unknown participant `{0}`")]
    UnknownParticipant(String),
    #[error("duplicate participant `{0}`")]
    DuplicateParticipant(String),
    #[error("duplicate visit {visit} for participant `{participant}`")]
    DuplicateVisit { participant: String, visit: u32 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("token id {id} out of range for vocabulary of size {size}")]
    TokenOutOfRange { id: usize, size: usize },
    #[error("state dimension mismatch: {0}")]
    StateMismatch(String),
    #[error(
        "training corpus has {tokens} tokens but batch_size {batch_size} x (bptt_window {bptt} + 1) \
         needs at least {needed}; use a smaller batch size or window"
    )]
    CorpusTooSmall {
        tokens: usize,
        batch_size: usize,
        bptt: usize,
        needed: usize,
    },
    #[error("embedding dimension mismatch: table has {table}, model expects {model}")]
    EmbeddingDim { table: usize, model: usize },
    #[error("embedding file line {line}: {message}")]
    EmbeddingFormat { line: usize, message: String },
    #[error("model mismatch in {0}")]
    ModelMismatch(String),
    #[error("interpolation weight {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("missing baseline variant")]
    MissingBaseline,
    #[error("invalid substitution table: {0}")]
    SubstitutionTable(String),
    #[error("undefined result: {0}")]
    Undefined(String),
    #[error("rank deficient design matrix: column `{column}` is collinear with {with:?}")]
    RankDeficient { column: String, with: Vec<String> },
    #[error("single-class input: both labels are required")]
    SingleClass,
    #[error("fold for participant `{participant}` failed: {message}")]
    Fold { participant: String, message: String },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Failures reading a model checkpoint. Each variant maps to a stable code.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint truncated: {0}")]
    Truncated(String),
    #[error("checkpoint corrupt: {0}")]
    Corrupt(String),
}

impl CheckpointError {
    pub fn code(&self) -> u8 {
        match self {
            CheckpointError::BadMagic => 1,
            CheckpointError::Version { .. } => 2,
            CheckpointError::Truncated(_) => 3,
            CheckpointError::Corrupt(_) => 4,
        }
    }
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
