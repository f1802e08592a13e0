use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad input or system description.
    #[error("configuration error: {0}")]
    Config(String),
    /// A computation could not be carried out (singular system, no convergence, ...).
    #[error("{0}")]
    Math(String),
    #[error("degenerate system: {0}")]
    Degenerate(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular start: {0}")]
    SingularStart(String),
    #[error("grid too coarse: {0} nodes on an axis, at least 5 needed")]
    GridTooCoarse(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
