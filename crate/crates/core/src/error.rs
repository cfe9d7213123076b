use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size {size}: need at least {min} customers")]
    InvalidSize { size: usize, min: usize },

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    #[error("parse error in field {field}: {message}")]
    Parse { field: String, message: String },

    #[error("infeasible tour: {}", .0.join("; "))]
    Infeasible(Vec<String>),

    #[error("no feasible action: construction already finished")]
    NoAction,

    #[error("invalid action {action}: masked in the current state")]
    InvalidAction { action: usize },

    #[error("oracle too large: {customers} customers exceeds limit {limit}")]
    OracleTooLarge { customers: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric error at {location}: non-finite value")]
    Numeric { location: String },

    #[error("replay of tour is infeasible at step {step}: action {action} is masked")]
    InfeasibleReplay { step: usize, action: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("degenerate baseline: {n_starts} rollout(s) per instance, need at least 2")]
    DegenerateBaseline { n_starts: usize },

    #[error("training aborted at epoch {epoch}, step {step}: {source}")]
    Training {
        epoch: usize,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn numeric(location: impl Into<String>) -> Self {
        Error::Numeric {
            location: location.into(),
        }
    }
}
