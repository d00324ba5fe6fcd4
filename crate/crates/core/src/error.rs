use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate. The CLI maps each variant to an exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical error in layer {layer}: {detail}")]
    Numerical { layer: usize, detail: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("expert failed {attempts} consecutive attempts on {env}")]
    ExpertQuality { env: String, attempts: usize },

    #[error("no successful episode among {episodes} rollouts")]
    NoSuccess { episodes: usize },

    #[error("cycle {cycle}: {source}")]
    Cycle {
        cycle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_cycle(self, cycle: usize) -> Self {
        Error::Cycle {
            cycle,
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 usage, 2 data/config, 3 runtime/numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Config(_) | Error::Input(_) | Error::Parse { .. } | Error::Io { .. } => 2,
            Error::Numerical { .. } | Error::ExpertQuality { .. } | Error::NoSuccess { .. } => 3,
            Error::Cycle { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
