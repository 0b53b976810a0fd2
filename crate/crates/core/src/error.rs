use std::path::PathBuf;

use thiserror::Error;

use crate::geom::Vec2;

#[derive(Debug, Error)]
pub enum Error {
    #[error("position {0} is outside the world bounds")]
    OutOfBounds(Vec2),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("config error in {path}: {field}: {msg}")]
    Config {
        path: PathBuf,
        field: String,
        msg: String,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(
        path: impl Into<PathBuf>,
        field: impl Into<String>,
        msg: impl Into<String>,
    ) -> Self {
        Error::Config {
            path: path.into(),
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// True for errors caused by bad user input (config files, worlds).
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
