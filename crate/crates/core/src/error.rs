use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{name} index {index} outside 1..={max}")]
    IndexOutOfRange {
        name: &'static str,
        index: usize,
        max: usize,
    },

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("eigenvalue iteration did not converge")]
    EigenFailure,

    #[error("non-finite {signal} at tick {tick}")]
    NonFinite { tick: usize, signal: &'static str },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
