use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input. `location` names the line and/or field.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// Well-formed input that violates a domain invariant.
    #[error("data error: {0}")]
    Data(String),

    #[error("timestamp {timestamp_ms} outside ephemeris span [{start_ms}, {end_ms}]")]
    OutOfRange {
        timestamp_ms: i64,
        start_ms: i64,
        end_ms: i64,
    },

    #[error("no acquisition opportunity: {0}")]
    NoOpportunity(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("oracle refused: {0}")]
    Refused(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    /// A solver produced output that violates its own model. Always a bug.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
