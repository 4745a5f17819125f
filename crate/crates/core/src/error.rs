use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("outside the collision domain: {0}")]
    Domain(String),

    #[error("degenerate collision (g = 0): scattering angle undefined")]
    DegenerateCollision,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "smallness violated: |||f0||| = {f0_norm:e}, R = {radius:e}, threshold = {threshold:e}"
    )]
    SmallnessViolated {
        f0_norm: f64,
        radius: f64,
        threshold: f64,
    },

    #[error(
        "no convergence after {iterations} iterations: residual {residual:e}, contraction ratio {ratio:e}"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        ratio: f64,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
