use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate sample: at least two distinct points are required, got {0}")]
    DegenerateSample(usize),

    #[error("knot {0} is not one of the sample points")]
    KnotsNotSubset(f64),

    #[error("mixture density is zero at observation {index} (x = {x})")]
    ZeroMixtureDensity { index: usize, x: f64 },

    #[error("unknown component collapsed: total responsibility {mass} below {threshold}")]
    ComponentCollapsed { mass: f64, threshold: f64 },

    #[error("all observations are assigned to the known component")]
    AllWeightsKnown,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    EmptyInput,

    #[error("unknown model id {0}, expected 1..=6")]
    UnknownModel(u8),

    #[error("replication {index} failed: {reason}")]
    ReplicationFailed { index: usize, reason: String },

    #[error("all {0} replications failed")]
    AllReplicationsFailed(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
