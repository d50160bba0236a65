use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),

    #[error("division by near-zero value {value:e} in `{divisor}`")]
    DivisionNearZero { divisor: String, value: f64 },

    #[error("sampling exhausted for `{identity}`: {guard_hits} of {draws} draws hit division guards")]
    SamplingExhausted {
        identity: String,
        guard_hits: usize,
        draws: usize,
    },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("form degree {degree} exceeds chart dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("alpha fit is ill-posed: the fundamental form samples to zero on every tested pair")]
    AlphaFitIllPosed,

    #[error("structure is not almost-S: {0}")]
    PreconditionNotAlmostS(String),

    #[error("all structure constants alpha are zero")]
    AllAlphaZero,

    #[error("restriction of the fundamental form to Im(phi) is singular at the pivot base point")]
    SingularRestriction,

    #[error("no axis-aligned t-box with tau >= 0.1 among the searched candidates")]
    EmptyPositiveCone,

    #[error("precondition violated: {relation} (residual {residual:e})")]
    PreconditionViolated { relation: String, residual: f64 },

    #[error("invalid eta choice: {0}")]
    InvalidEtaChoice(String),

    #[error("schema error in `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error("in `{field}`: {source}")]
    Field {
        field: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn in_field(self, field: impl Into<String>) -> Self {
        Error::Field {
            field: field.into(),
            source: Box::new(self),
        }
    }

    /// Errors that stem from a structure failing a mathematical precondition
    /// rather than from malformed input.
    pub fn is_precondition(&self) -> bool {
        match self {
            Error::AlphaFitIllPosed
            | Error::PreconditionNotAlmostS(_)
            | Error::AllAlphaZero
            | Error::SingularRestriction
            | Error::EmptyPositiveCone
            | Error::PreconditionViolated { .. }
            | Error::InvalidEtaChoice(_)
            | Error::SamplingExhausted { .. }
            | Error::DivisionNearZero { .. } => true,
            Error::Field { source, .. } => source.is_precondition(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
