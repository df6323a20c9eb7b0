use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error in {file} at line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown AS {0}")]
    UnknownAsn(u32),

    #[error("unknown relay id {0}")]
    UnknownRelay(u32),

    #[error("path selection error: {0}")]
    Selection(String),

    #[error("g-select starvation: client {client} has no guard avoiding the first {avoid_count} suspect ASes")]
    GSelectStarvation { client: u32, avoid_count: usize },

    #[error("simulation error for client {client}: {message}")]
    Simulation { client: u32, message: String },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Degenerate-data errors map to exit code 3, everything else that reaches
    /// the command line is an input error (exit code 2).
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Degenerate(_))
    }
}
