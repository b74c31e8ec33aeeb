use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}", match .line {
        Some(l) => format!("semantic error at line {l}: {message}"),
        None => format!("semantic error: {message}"),
    })]
    Semantic { line: Option<usize>, message: String },

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("index must be at least 1, got {0}")]
    InvalidIndex(u64),

    #[error("gate system is not admissible: {0}")]
    Inadmissible(String),

    /// A vertex whose lifts have degree below 2 gives the Bass–Serre tree
    /// leaves (or makes it finite).
    #[error("degenerate graph of groups: vertex `{vertex}` has tree degree {degree}, so the Bass–Serre tree has leaves")]
    DegenerateTree { vertex: String, degree: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} exceeded cap of {limit}")]
    CapExceeded { what: String, limit: usize },

    #[error("predicate is not monotone: true at {below:?} but false at {above:?}")]
    NotMonotone { below: Vec<u64>, above: Vec<u64> },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn semantic(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Semantic {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn cap(what: impl Into<String>, limit: usize) -> Self {
        Error::CapExceeded {
            what: what.into(),
            limit,
        }
    }

    pub(crate) fn pre(message: impl Into<String>) -> Self {
        Error::Precondition(message.into())
    }

    /// `true` for errors caused by a resource cap rather than bad input.
    pub fn is_cap(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }

    /// `true` for errors that indicate a bug rather than bad input.
    pub fn is_invariant(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}
