use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("unknown DECLARE template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` takes {expected} atom(s), got {got}")]
    Arity {
        template: String,
        expected: usize,
        got: usize,
    },
    #[error("instant {index} out of range for a trace of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("missing value for leaf {0}")]
    MissingLeaf(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
