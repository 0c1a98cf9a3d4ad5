//! Error types shared across the analysis pipeline.

use thiserror::Error;

/// Errors raised while building or validating the core model types.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unresolved type `{0}`")]
    UnresolvedType(String),
    #[error("inheritance cycle through `{0}`")]
    InheritanceCycle(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

/// Syntax errors carry the source position and what the parser expected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{file}:{line}:{col}: syntax error: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub expected: String,
    pub found: String,
}

/// Errors raised while lowering an AST to program facts.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LowerError {
    #[error("{file}:{line}: name resolution error: {message}")]
    NameResolution {
        file: String,
        line: u32,
        message: String,
    },
}

/// Errors raised by call-graph, slicing and usage-model construction.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("no entrypoint: {0}")]
    NoEntrypoint(String),
    #[error("no framework usage found for entrypoint `{0}`")]
    EmptyUsage(String),
    #[error("order-constraint cycle after augmentation: {0}")]
    CycleAfterAugmentation(String),
    #[error("graph has {actual} nodes, canonicalization limit is {limit}")]
    SizeLimitExceeded { actual: usize, limit: usize },
}

/// Errors raised by the recommender queries.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecommendError {
    #[error("no context match: only the start node matches the model")]
    NoMatch,
    #[error("nothing missing: the usage embeds into the model as-is")]
    NothingMissing,
}

/// Errors raised by the evaluation harness.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("corpus too small: {0} programs, need at least 2")]
    CorpusTooSmall(usize),
}

/// Umbrella error for pipeline drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Whether the error is an input problem (bad files, bad sources) as
    /// opposed to an analysis failure on well-formed input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax(_) | Error::Lower(_) | Error::Io { .. } | Error::Json { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
