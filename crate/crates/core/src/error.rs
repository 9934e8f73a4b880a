use thiserror::Error;

/// Errors raised by scene construction, queries and the verification pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("scene escapes the cylinder |z'| < 1: {0}")]
    EscapesCylinder(String),

    #[error("point set is empty")]
    EmptySet,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// A theorem or lemma hypothesis failed on the sampled data.
    #[error("hypothesis `{name}` violated: {detail}")]
    Hypothesis { name: &'static str, detail: String },

    /// The nearest-point projection is not single-valued near the query.
    #[error("ambiguous nearest-point projection: {0}")]
    AmbiguousProjection(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn hypothesis(name: &'static str, detail: impl Into<String>) -> Error {
    Error::Hypothesis {
        name,
        detail: detail.into(),
    }
}
