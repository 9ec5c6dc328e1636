use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum MpgError {
    #[error("transition row (state {state}, joint action {action}) is not a probability distribution: sum = {sum}")]
    NonStochasticRow { state: usize, action: usize, sum: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFiniteEntry(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("discount must lie in [0, 1), got {0}")]
    InvalidDiscount(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("linear system (I - gamma P) is singular")]
    SingularSystem,

    #[error("policy iteration did not terminate within {0} sweeps")]
    NonTermination(u64),

    #[error("game declares no potential function")]
    MissingPotential,

    #[error("value must be strictly positive: {0}")]
    NonPositiveValue(String),

    #[error("enumeration of {count} candidates exceeds the limit {limit}")]
    TooLargeToEnumerate { count: f64, limit: f64 },

    #[error("optimal welfare {0} is not positive")]
    DegenerateOptimum(f64),

    #[error("discounted visitation of state {state} is {value} (must be > 0)")]
    ZeroVisitation { state: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl MpgError {
    /// Whether the failure is numerical (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            MpgError::SingularSystem
                | MpgError::NonTermination(_)
                | MpgError::NonPositiveValue(_)
                | MpgError::DegenerateOptimum(_)
                | MpgError::ZeroVisitation { .. }
        )
    }

    /// Short machine-readable tag, used in JSON reports.
    pub fn kind(&self) -> &'static str {
        match self {
            MpgError::NonStochasticRow { .. } => "NonStochasticRow",
            MpgError::ShapeMismatch(_) => "ShapeMismatch",
            MpgError::NonFiniteEntry(_) => "NonFiniteEntry",
            MpgError::InvalidDistribution(_) => "InvalidDistribution",
            MpgError::InvalidDiscount(_) => "InvalidDiscount",
            MpgError::DimensionMismatch(_) => "DimensionMismatch",
            MpgError::SingularSystem => "SingularSystem",
            MpgError::NonTermination(_) => "NonTermination",
            MpgError::MissingPotential => "MissingPotential",
            MpgError::NonPositiveValue(_) => "NonPositiveValue",
            MpgError::TooLargeToEnumerate { .. } => "TooLargeToEnumerate",
            MpgError::DegenerateOptimum(_) => "DegenerateOptimum",
            MpgError::ZeroVisitation { .. } => "ZeroVisitation",
            MpgError::InvalidConfig(_) => "InvalidConfig",
            MpgError::Io(_) => "Io",
            MpgError::Json(_) => "Json",
        }
    }
}

pub type Result<T> = std::result::Result<T, MpgError>;
