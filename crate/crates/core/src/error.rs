use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution {what}: {reason}")]
    InvalidDistribution { what: String, reason: String },

    #[error("invalid component space: {0}")]
    InvalidSpace(String),

    #[error("unknown component {0}")]
    UnknownComponent(usize),

    #[error("unknown value index {value} for component {component}")]
    UnknownValue { component: usize, value: usize },

    #[error("conditioning event has zero prior mass")]
    ZeroMassEvent,

    #[error("message {0} has zero probability under the current belief")]
    ZeroProbabilityMessage(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("condition not verified: {0}")]
    ConditionNotVerified(String),

    #[error("subset space too large: {0} senders (limit 20)")]
    SubsetSpaceTooLarge(usize),

    #[error("sender {0} does not post an all-or-nothing table policy")]
    NonAonPolicy(usize),

    #[error("round limit of {0} exceeded")]
    RoundLimitExceeded(u64),

    #[error("exact enumeration needs {needed} terms, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
}
