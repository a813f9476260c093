use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    MalformedRow { path: PathBuf, row: u64, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("book {0} has no passages")]
    EmptyBook(String),

    #[error("answer has {answer} tokens but passage only has {passage}")]
    AnswerLongerThanPassage { answer: usize, passage: usize },

    #[error("word {0:?} does not occur in the corpus")]
    UnknownWord(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("index file {path}: {message}")]
    IndexFormat { path: PathBuf, message: String },

    #[error("scorer protocol violation: {message} (line: {line:?})")]
    Protocol { message: String, line: String },

    #[error("scorer process: {0}")]
    ScorerProcess(String),

    #[error("duplicate record: {0}")]
    Duplicate(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
