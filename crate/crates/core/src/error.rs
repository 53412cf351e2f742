use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported or malformed {format} data: {detail}")]
    Format { format: String, detail: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{field}`: {detail}")]
    Spec { field: String, detail: String },

    #[error("key error: {0}")]
    Key(String),

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("image too small: {0}")]
    Size(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(format: impl Into<String>, detail: impl ToString) -> Self {
        Error::Format { format: format.into(), detail: detail.to_string() }
    }

    pub(crate) fn spec(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Spec { field: field.into(), detail: detail.into() }
    }
}
