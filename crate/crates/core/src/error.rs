//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed input line. `line` is 1-based when known.
    #[error("parse error{}: {reason}: {content:?}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        reason: String,
        content: String,
    },

    #[error("unknown concept id {0}")]
    UnknownConcept(u32),

    #[error("unknown concept {0:?}")]
    UnknownSurface(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("bad file format: {0}")]
    Format(String),

    /// Training or evaluation produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: Option<usize>, reason: impl Into<String>, content: &str) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
            content: content.to_string(),
        }
    }

    /// Attach a line number to a parse error that lacks one.
    pub(crate) fn at_line(self, lineno: usize) -> Self {
        match self {
            Error::Parse {
                line: None,
                reason,
                content,
            } => Error::Parse {
                line: Some(lineno),
                reason,
                content,
            },
            other => other,
        }
    }
}
