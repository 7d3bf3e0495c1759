//! Error type shared across the pipeline.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dataset root not found: {0}")]
    RootMissing(PathBuf),

    #[error("csv error on {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("schema mismatch in {path}: {message}")]
    SchemaMismatch { path: PathBuf, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("trace too short: {0} valid samples (need at least 2)")]
    TraceTooShort(usize),

    #[error("no sessions for app {0}")]
    NoSessions(String),

    #[error("undersampled trace: {samples} samples for {blocks} blocks")]
    Undersampled { samples: usize, blocks: usize },

    #[error("no valid blocks left after post-processing")]
    NoValidBlocks,

    #[error("unknown emotion: {0}")]
    UnknownEmotion(String),

    #[error("empty element set for emotion {0}")]
    EmptyEmotion(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("class u_{user} has only {rows} rows (need at least {need})")]
    ClassTooSmall { user: u32, rows: usize, need: usize },

    #[error("degenerate feature table: {0}")]
    DegenerateTable(String),

    #[error("column manifest mismatch: {0}")]
    ManifestMismatch(String),

    #[error("zero-day undefined for singleton group {0}")]
    ZeroDayUndefined(String),

    #[error("majority vote over empty label list")]
    EmptyVote,

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
