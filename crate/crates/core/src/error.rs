use std::path::PathBuf;

/// Errors raised by the sampling library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid field spec: {0}")]
    InvalidSpec(String),

    #[error("unstable diffusion: coefficient {0} exceeds 0.25")]
    Unstable(f64),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A caller broke a documented precondition (e.g. infeasible action).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training diverged at iteration {iteration}: |theta| reached {magnitude:e}")]
    Divergence { iteration: usize, magnitude: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
