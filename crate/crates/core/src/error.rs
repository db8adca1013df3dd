use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    /// The document is not well-formed XML.
    #[error("line {line}: malformed XML: {message}")]
    Syntax { line: usize, message: String },
    /// Well-formed XML that does not follow the corpus schema.
    #[error("line {line}: {message}{}", location(text_id.as_deref(), *sentence))]
    Schema {
        line: usize,
        text_id: Option<String>,
        sentence: Option<u32>,
        message: String,
    },
    /// A corpus invariant does not hold.
    #[error("{message}{}", location(Some(text_id.as_str()), *sentence))]
    Validation {
        text_id: String,
        sentence: Option<u32>,
        message: String,
    },
}

fn location(text_id: Option<&str>, sentence: Option<u32>) -> String {
    match (text_id, sentence) {
        (Some(t), Some(s)) => format!(" (text {t:?}, sentence {s})"),
        (Some(t), None) if !t.is_empty() => format!(" (text {t:?})"),
        _ => String::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryErrorKind {
    /// The text does not follow the query grammar.
    Syntax,
    /// Grammatical, but violates a query rule (unknown key, keyword count,
    /// quantified keyword, bad value).
    Invalid,
}

/// Query parse or validation failure. `column` is 1-based, counted in
/// characters; it is 0 for structured queries that have no source text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct QueryError {
    pub kind: QueryErrorKind,
    pub column: usize,
    pub message: String,
}

impl QueryError {
    pub(crate) fn syntax(column: usize, message: impl Into<String>) -> Self {
        QueryError {
            kind: QueryErrorKind::Syntax,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(column: usize, message: impl Into<String>) -> Self {
        QueryError {
            kind: QueryErrorKind::Invalid,
            column,
            message: message.into(),
        }
    }
}

/// A caller-supplied argument is out of range.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid argument: {0}")]
pub struct ArgumentError(pub String);

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not an index snapshot (bad magic bytes)")]
    BadMagic,
    #[error("unsupported snapshot version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("corrupt snapshot: {0}")]
    Decode(String),
    #[error("cannot encode snapshot: {0}")]
    Encode(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("a session needs at least one item")]
    NoItems,
    #[error("invalid session configuration: {0}")]
    Config(String),
    #[error("the session is finished")]
    Finished,
}
