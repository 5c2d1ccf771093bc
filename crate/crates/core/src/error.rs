use thiserror::Error;

/// Errors produced anywhere in the selection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("landmark `{0}` carries no information (zero measurement gradient)")]
    Uninformative(String),

    #[error("point lies behind the camera (depth {depth} m)")]
    BehindCamera { depth: f64 },

    #[error("infeasible selection: {0}")]
    Infeasible(String),

    #[error("instance too large for exhaustive search: {0} landmarks (limit 20)")]
    TooLarge(usize),

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
