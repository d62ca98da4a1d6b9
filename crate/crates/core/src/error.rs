use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("invalid value for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("input is not valid UTF-8: {0}")]
    Decode(#[from] std::str::Utf8Error),

    #[error("corpus contains no tokens")]
    EmptyCorpus,

    #[error("reserved marker `{0}` found in corpus content")]
    ReservedWord(String),

    #[error("unknown word id {0}")]
    UnknownId(u32),

    #[error("unknown word `{0}`")]
    UnknownWord(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cannot project the zero vector onto the sphere")]
    ZeroVector,

    #[error("distribution is not normalized (sum = {0})")]
    Unnormalized(f64),

    #[error("stream length mismatch at position {position}")]
    LengthMismatch { position: usize },

    #[error("sentence {sentence}: {source}")]
    Sentence {
        sentence: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }
}
