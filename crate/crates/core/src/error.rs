use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("cannot read scenario file: {0}")]
    Io(String),
    #[error("cannot parse scenario file: {0}")]
    Parse(String),
}

impl ScenarioError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Name of the offending field, when the error is tied to one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ScenarioError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodebookError {
    #[error("invalid codebook parameter `{0}`")]
    BadParameter(&'static str),
    #[error("selector has {ones} active entries, at most one allowed")]
    MultipleSelection { ones: usize },
    #[error("selector has length {got}, codebook size is {expected}")]
    Length { got: usize, expected: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{scheduled} scheduled targets exceed min(K, T) = {limit}")]
    TooManyTargets { scheduled: usize, limit: usize },
    #[error("trace expansion left a non-zero imaginary coefficient ({0:e})")]
    NonHermitian(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("primal vector has {got} entries, model has {expected}")]
    Length { got: usize, expected: usize },
    #[error("{0} users scheduled, expected {1}")]
    UserCount(usize, usize),
    #[error("{0} targets scheduled, expected {1}")]
    TargetCount(usize, usize),
    #[error("target {target} is paired {count} times")]
    Pairing { target: usize, count: usize },
    #[error("user {user} antenna {antenna}: {reason}")]
    Selector {
        user: usize,
        antenna: usize,
        reason: String,
    },
    #[error("beam of user {user} disagrees with the solved covariance by {error:e}")]
    Covariance { user: usize, error: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("exhaustive search needs {candidates} candidates, budget is {budget}")]
    BudgetExceeded { candidates: u128, budget: u128 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Lp(#[from] milp::LpError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("channel of user {0} is zero")]
    ZeroChannel(usize),
    #[error("cannot pick {want} from {have}")]
    Selection { want: usize, have: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}
