use thiserror::Error;

/// Errors raised by estimators, samplers and metrics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("evaluation budget exhausted: requested {requested}, remaining {remaining}")]
    BudgetExhausted { requested: u64, remaining: u64 },

    #[error("envelope violated at proposed point: f(x) = {f_value} > g(x) = {envelope}")]
    EnvelopeViolation { f_value: f64, envelope: f64 },

    #[error("missing oracle: {0}")]
    MissingOracle(&'static str),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Short stable identifier, used in CSV failure rows.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BudgetExhausted { .. } => "BudgetExhausted",
            Error::EnvelopeViolation { .. } => "EnvelopeViolation",
            Error::MissingOracle(_) => "MissingOracle",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::UnsupportedDimension(_) => "UnsupportedDimension",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

/// An id string that names no entry of the given registry.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {registry} id `{id}`")]
pub struct UnknownIdError {
    pub registry: &'static str,
    pub id: String,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
