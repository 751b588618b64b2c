use thiserror::Error;

/// Everything that can go wrong while building, analysing or reading an MDP.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("transition row of state `{state}`, action `{action}` sums to {sum} (expected 1)")]
    RowSum {
        state: String,
        action: String,
        sum: f64,
    },

    #[error("negative probability {value} in row of state `{state}`, action `{action}`")]
    NegativeProbability {
        state: String,
        action: String,
        value: f64,
    },

    #[error("state `{0}` has no actions")]
    EmptyActionSet(String),

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("malformed instance: {0}")]
    Shape(String),

    #[error("policy space has {count} policies, above the enumeration cap of {cap}")]
    EnumerationCapExceeded { count: u128, cap: u128 },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("the MDP is not unichain")]
    NotUnichain,

    #[error("the MDP is not ergodic (policy {witness:?} induces a reducible chain)")]
    NotErgodic { witness: Vec<usize> },

    #[error("iteration limit of {0} exceeded")]
    IterationLimitExceeded(u64),

    #[error("no policy attains the component-wise maximal bias (tie tolerance too tight?)")]
    NoUniformBiasOptimal,

    #[error("every policy is gain-optimal; the gain gap is undefined")]
    NoSuboptimalPolicy,

    #[error("gain/gap inequality violated for policy {policy:?} at state {state}: slack {slack}")]
    LemmaViolation {
        policy: Vec<usize>,
        state: usize,
        slack: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
