use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("input is empty")]
    EmptyInput,

    #[error("partition produced zero snapshots")]
    NoSnapshots,

    #[error("snapshot {0} has no nodes")]
    EmptySnapshot(usize),

    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A complex at an integer position is not contained in the adjacent
    /// union complex.
    #[error("subcomplex violation at position {position}: {detail}")]
    SubcomplexViolation { position: String, detail: String },

    #[error("stage `{stage}` failed at snapshot {snapshot}: {source}")]
    Stage {
        stage: &'static str,
        snapshot: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str, snapshot: usize) -> Self {
        Error::Stage {
            stage,
            snapshot,
            source: Box::new(self),
        }
    }

    /// True for failures of an internal consistency check rather than bad
    /// input. The CLI maps these to exit code 2.
    pub fn is_internal(&self) -> bool {
        match self {
            Error::SubcomplexViolation { .. } => true,
            Error::Stage { source, .. } => source.is_internal(),
            _ => false,
        }
    }
}
