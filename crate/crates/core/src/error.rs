use std::path::PathBuf;

/// Errors raised by the engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("the conditioning event of a {kind} excursion of length {len} has probability zero at p = {p}")]
    NullEvent {
        kind: &'static str,
        len: usize,
        p: f64,
    },

    #[error("degenerate contact-set law: every configuration has zero weight")]
    DegenerateLaw,

    #[error("path of length {found} does not match expected length {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("malformed contact set: {0}")]
    MalformedSet(String),

    #[error("invalid lattice path: {0}")]
    InvalidPath(String),

    #[error("{what}: size {size} exceeds the supported limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
