use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("virtual cost undefined at {cost}: density is zero")]
    UndefinedVirtualCost { cost: f64 },

    #[error("invalid value function: {0}")]
    InvalidValueFunction(String),

    #[error("operation requires a {expected} value function")]
    WrongVariant { expected: &'static str },

    #[error("instance too large for exhaustive evaluation: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("sample count must be positive for a sampled estimate")]
    ZeroSamples,

    #[error("budget must be positive, got {0}")]
    NonPositiveBudget(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value function is not monotone submodular")]
    NotSubmodular,

    #[error("market size {k} admits no epsilon in (2/k, 1/2); need k > 4")]
    MarketTooSmall { k: f64 },

    #[error("epsilon {0} outside (0, 1/2)")]
    InvalidEpsilon(f64),

    #[error("agent {agent} has zero price but positive acceptance probability")]
    ZeroPrice { agent: usize },

    #[error("invalid ordering: {0}")]
    InvalidOrder(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
