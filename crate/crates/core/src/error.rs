use thiserror::Error;

/// Errors surfaced by the evaluation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("reference is empty while hypothesis is not")]
    EmptyReference,
    #[error("no scores to aggregate")]
    EmptyScoreSet,
    #[error("metric column '{0}' is constant; correlation undefined")]
    DegenerateColumn(&'static str),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate id '{0}'")]
    DuplicateId(String),
    #[error("id '{0}' not present in manifest")]
    MissingId(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: schema violation: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
    #[error("unknown grouping dimension '{0}'")]
    UnknownDimension(String),
    #[error("score id '{0}' has no manifest record")]
    UnresolvedId(String),
    #[error("cross-tabulation requires exactly two dimensions, got {0}")]
    Dimensionality(usize),
    #[error("no systems to compare")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
