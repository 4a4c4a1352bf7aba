use std::path::PathBuf;

/// Errors raised by the samplers, the distribution layer and the experiment
/// tooling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A sampler invariant that must hold by construction was found broken.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("empty slice interval ({lo}, {hi})")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
