use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("degenerate likelihood: every grid likelihood is below 1e-300")]
    DegenerateLikelihood,

    #[error("degenerate likelihood at adaptive step {step}")]
    DegenerateStep { step: usize },

    #[error("Fisher information undefined at exact nulling (denominator {denominator:e})")]
    NullingSingularity { denominator: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("amplitude must be positive, got {0}")]
    NonPositiveAlpha(f64),

    #[error("singular normal matrix in {0} fit")]
    SingularFit(&'static str),

    #[error("fit did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("model selection inconclusive: {0}")]
    Inconclusive(String),

    #[error("{excluded} of {trials} trials excluded, above the 1% limit")]
    TooManyExclusions { excluded: usize, trials: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
