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

    #[error("{source_name}:{line}: {message}")]
    Malformed {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("captions reference unknown articles: {}", .0.join(", "))]
    DanglingArticles(Vec<String>),

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("idf table is empty; build it from the evaluation references first")]
    EmptyIdf,

    #[error("gold keyword list is empty for {0:?}")]
    EmptyGold(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn malformed(source_name: impl Into<String>, line: usize, message: impl ToString) -> Self {
        Error::Malformed {
            source_name: source_name.into(),
            line,
            message: message.to_string(),
        }
    }
}
