use thiserror::Error;

/// Problems found while reading a scenario or experiment document.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("invalid value at {path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid { path: path.into(), message: message.into() }
    }
}

/// Errors raised by the Q-network and its weight files.
#[derive(Debug, Error)]
pub enum NetError {
    #[error("input has length {got}, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported weight file version {0:?}")]
    Version(String),
    #[error("layer {layer}: {message}")]
    Shape { layer: usize, message: String },
    #[error("cannot parse weight file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Errors raised by path utilities and the ground-truth search.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("path is empty")]
    Empty,
    #[error("cells {0} and {1} are not adjacent")]
    NotAdjacent(String, String),
    #[error("cell {0} is visited twice")]
    Repeated(String),
    #[error("cell {0} lies outside the grid")]
    OutOfGrid(String),
    #[error("grid has {cells} cells; exhaustive search is limited to {limit}")]
    TooLarge { cells: usize, limit: usize },
    #[error("walk reached a dead end at {0} before the exit")]
    DeadEnd(String),
}

/// Replay sampling failure.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("replay buffer holds {available} experiences, {requested} requested")]
pub struct InsufficientSamples {
    pub available: usize,
    pub requested: usize,
}
