use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("argument {name} = {value} outside the domain ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("need at least {min} observations, got {n}")]
    TooFewObservations { n: usize, min: usize },

    #[error("observation {value} at index {index} is not strictly above the truncation point {x_l}")]
    BelowTruncation { index: usize, value: f64, x_l: f64 },

    #[error("fitted truncation point {fitted} does not match the sample truncation point {sample}")]
    TruncationMismatch { sample: f64, fitted: f64 },

    #[error("root finding failed: {0}")]
    Convergence(String),

    #[error("goodness-of-fit tests need a regular fit, got {0}")]
    UnsupportedOutcome(&'static str),

    #[error("critical value table, line {line}: {msg}")]
    TableFormat { line: usize, msg: String },

    #[error("unknown {kind} '{value}'")]
    Unknown { kind: &'static str, value: String },
}
