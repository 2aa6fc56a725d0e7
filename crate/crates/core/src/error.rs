use std::path::PathBuf;

/// Errors raised by the engine. Every variant carries enough context (file,
/// line, id) to locate the offending input.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate {what} {id:?}")]
    Conflict { what: &'static str, id: String },

    #[error("unknown {what} {id:?}")]
    NotFound { what: &'static str, id: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("candidate sets do not align for query {query_id:?}: {detail}")]
    Alignment { query_id: String, detail: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
