use thiserror::Error;

#[derive(Debug, Error)]
pub enum PxgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid pair: endpoints coincide")]
    CoincidentPair,

    #[error("duplicate points at indices {first} and {second}")]
    DuplicatePoints { first: usize, second: usize },

    #[error("graph was built from {graph_points} points but cloud has {cloud_points}")]
    GraphCloudMismatch {
        graph_points: usize,
        cloud_points: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty sample")]
    EmptySample,

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for PxgError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => PxgError::Io(io),
            other => PxgError::Format(format!("csv: {other:?}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, PxgError>;

impl PxgError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        PxgError::InvalidParameter(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        PxgError::Config(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        PxgError::Format(msg.into())
    }
}
