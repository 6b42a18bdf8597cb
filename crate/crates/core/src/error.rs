use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{routine} did not converge within {iterations} iterations")]
    NoConvergence { routine: &'static str, iterations: usize },

    #[error("shifted matrix is numerically singular")]
    Singular,

    #[error("bracket word of length {len} exceeds the supported depth {max}")]
    UnsupportedDepth { len: usize, max: usize },

    #[error("no admissible beam center on the level set")]
    NoAdmissibleCenter,

    #[error("turning point: the ξ-derivative of the symbol vanishes at the beam center")]
    TurningPoint,

    #[error("sublevel set touches the phase-space box boundary; enlarge the box")]
    BoxTooSmall,

    #[error("empty level-set sample")]
    EmptySample,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("rejection sampling failed after {tries} tries (radius too small)")]
    RejectionFailure { tries: usize },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { field, reason: reason.into() }
    }
}
