use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid membership function `{label}`: {reason}")]
    InvalidMembership { label: String, reason: String },

    #[error("invalid fuzzy variable `{variable}`: {reason}")]
    InvalidVariable { variable: String, reason: String },

    #[error("invalid {variable} value {value}: expected one of {valid}")]
    UnknownCode {
        variable: &'static str,
        value: String,
        valid: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no rule fires for the given input")]
    AllRulesSilent,

    #[error("rule base does not reproduce the baseline anchor {antecedent}: expected k = {expected}, got {actual}")]
    AnchorMismatch {
        antecedent: String,
        expected: f64,
        actual: f64,
    },

    #[error("invalid rule base: {0}")]
    InvalidRuleBase(String),

    #[error("rule file line {line}: {reason}")]
    RuleFile { line: usize, reason: String },

    #[error("invalid surface request: {0}")]
    InvalidSurface(String),

    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("no pending suggestion to correct")]
    NoPendingSuggestion,

    #[error("corrupt profile: {0}")]
    CorruptProfile(String),

    #[error("profile {0} already has an active session")]
    ConflictingSession(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
