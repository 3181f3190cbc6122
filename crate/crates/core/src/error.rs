use std::fmt;

use thiserror::Error;

use crate::state_space::Emergency;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model needs at least one user and one resource (got {num_users} users, {num_resources} resources)")]
    InvalidDims { num_users: usize, num_resources: usize },

    #[error("state space too large: {bits} accesses exceeds the cap of {cap} bits")]
    Capacity { bits: usize, cap: u32 },

    #[error("discount factor must lie in [0, 1), got {0}")]
    InvalidBeta(f64),

    #[error("emergency row `{row}` is not a probability distribution (entries {entries:?})")]
    NonStochastic { row: Emergency, entries: [f64; 2] },

    #[error("expected {expected} {what} labels, got {got}")]
    LabelCount { what: &'static str, expected: usize, got: usize },

    #[error("reward table entry is not finite: {0}")]
    NonFiniteReward(String),

    #[error("unknown builtin scenario `{0}`")]
    UnknownBuiltin(String),

    #[error("{0}")]
    Scenario(#[from] ScenarioErrors),

    #[error(transparent)]
    ValueFile(#[from] ValueFileError),

    #[error("solver failed: {0}")]
    Solve(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One problem found while parsing a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioIssue {
    /// 1-based line, or 0 when the issue concerns the file as a whole.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ScenarioIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// Every issue found in a scenario file, in line order.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ScenarioErrors(pub Vec<ScenarioIssue>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario:")?;
        for issue in &self.0 {
            write!(f, "\n  {issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValueFileError {
    #[error("line 1: unsupported header `{0}` (expected `ACMDP-VALUES v1`)")]
    Version(String),

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("value table has {got} rows, expected {expected}")]
    Incomplete { expected: usize, got: usize },

    #[error("fingerprint mismatch: file has {found}, scenario has {expected}")]
    Fingerprint { expected: String, found: String },

    #[error("dimension mismatch: {0}")]
    Dimensions(String),
}
