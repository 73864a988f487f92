use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("evaluation domain error: {0}")]
    EvaluationDomainError(String),
    #[error("canonical and numeric zero tests disagree: {0}")]
    ModeDisagreement(String),
    #[error("unbound symbol: {0}")]
    UnboundSymbol(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("reduction does not terminate: {0}")]
    NonTerminatingReduction(String),
    #[error("expression is nonlinear in the equations: {0}")]
    NonlinearInSlack(String),
    #[error("expression does not vanish on solutions: {0}")]
    NotVanishingOnSolutions(String),
    #[error("current is not conserved: {0}")]
    NotConserved(String),
    #[error("scaling weight vanishes: {0}")]
    ScalingCritical(String),
    #[error("scaling weight cannot be determined: {0}")]
    WeightIndeterminate(String),
    #[error("inconsistent parameter assumptions: {0}")]
    InconsistentAssumptions(String),
    #[error("action does not close on the span: {0}")]
    NotClosed(String),
    #[error("{line}:{col}: parse error: {msg}")]
    ParseError { line: usize, col: usize, msg: String },
    #[error("unknown symbol: {0}")]
    UnknownSymbol(String),
    #[error("ranking violation: {0}")]
    RankingViolation(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// The variant name, used to match expected errors in documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EvaluationDomainError(_) => "EvaluationDomainError",
            Error::ModeDisagreement(_) => "ModeDisagreement",
            Error::UnboundSymbol(_) => "UnboundSymbol",
            Error::DomainError(_) => "DomainError",
            Error::NonTerminatingReduction(_) => "NonTerminatingReduction",
            Error::NonlinearInSlack(_) => "NonlinearInSlack",
            Error::NotVanishingOnSolutions(_) => "NotVanishingOnSolutions",
            Error::NotConserved(_) => "NotConserved",
            Error::ScalingCritical(_) => "ScalingCritical",
            Error::WeightIndeterminate(_) => "WeightIndeterminate",
            Error::InconsistentAssumptions(_) => "InconsistentAssumptions",
            Error::NotClosed(_) => "NotClosed",
            Error::ParseError { .. } => "ParseError",
            Error::UnknownSymbol(_) => "UnknownSymbol",
            Error::RankingViolation(_) => "RankingViolation",
            Error::InvalidSystem(_) => "InvalidSystem",
            Error::Usage(_) => "Usage",
        }
    }
}
