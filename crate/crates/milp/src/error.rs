use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("constraint `{constraint}` references unknown variable index {index}")]
    UnknownVariable { constraint: String, index: usize },
    #[error("variable `{name}` has non-finite or inverted bounds [{lower}, {upper}]")]
    BadBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("binary variable `{name}` must have bounds inside [0, 1], got [{lower}, {upper}]")]
    BinaryBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("non-finite coefficient in `{location}`")]
    NonFinite { location: String },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error("simplex did not converge within {iterations} iterations")]
    IterationLimit { iterations: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}
