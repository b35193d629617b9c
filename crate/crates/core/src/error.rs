use std::path::PathBuf;

use crate::corpus::TokenSpan;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("example {id:?}: {message}")]
    InvalidExample { id: String, message: String },

    #[error("duplicate example id {0:?}")]
    DuplicateId(String),

    #[error("char span [{start},{end}) covers no token")]
    EmptyCharSpan { start: usize, end: usize },

    #[error("char span [{start},{end}) outside text of {len} chars")]
    CharSpanOutOfBounds { start: usize, end: usize, len: usize },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("percentile of an empty set")]
    EmptyLengths,

    #[error("percentile {0} outside (0, 100]")]
    InvalidPercentile(f64),

    #[error("overlapping spans {0} and {1} cannot be tag-encoded")]
    OverlappingSpans(TokenSpan, TokenSpan),

    #[error("invalid tag transition at position {position}: {message}")]
    InvalidTransition { position: usize, message: String },

    #[error("unknown tag {0:?}")]
    UnknownTag(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range for {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("span {span} is longer than the maximum span length {max}")]
    SpanTooLong { span: TokenSpan, max: usize },

    #[error("model file: {0}")]
    Model(String),

    #[error("prediction for unknown id {0:?}")]
    UnknownPredictionId(String),

    #[error("unknown report format {0:?}")]
    UnknownFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the content of an input rather than by the
    /// environment (missing files and the like).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
