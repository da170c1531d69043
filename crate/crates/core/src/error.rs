use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph with {n} nodes exceeds the limit of {limit} for this operation")]
    SizeLimitExceeded { n: usize, limit: usize },

    #[error("node selection is empty")]
    EmptySelection,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid graph: {0}")]
    Validation(String),

    #[error("pattern with {n} nodes exceeds the counting limit of {limit}")]
    PatternTooLarge { n: usize, limit: usize },

    #[error("pattern is not a star with center node 1: {0}")]
    NotAStar(String),

    #[error("index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("refinement of {n}^{k} tuples exceeds the budget of {budget}")]
    BudgetExceeded { n: usize, k: usize, budget: usize },

    #[error("pattern needs at least 3 nodes, got {0}")]
    PatternTooSmall(usize),

    #[error("pattern is disconnected")]
    PatternDisconnected,

    #[error("egonet depth {0} is not supported (only depth 1)")]
    DepthUnsupported(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("split `{0}` is empty")]
    EmptySplit(&'static str),

    #[error("need at least {needed} graphs to split, got {got}")]
    TooFewGraphs { needed: usize, got: usize },

    #[error("graph generation failed: {0}")]
    GenerationFailure(String),

    #[error("file not found: {0}")]
    FileNotFound(String),

    #[error("duplicate report id `{0}`")]
    DuplicateId(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
