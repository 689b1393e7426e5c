use thiserror::Error;

use crate::dist::DistKind;
use crate::trace::{Address, Trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("invalid {kind} parameters: {reason}")]
    InvalidParameters { kind: DistKind, reason: String },
    #[error("{kind} cannot score a {value} value")]
    TypeMismatch { kind: DistKind, value: &'static str },
}

/// Failure raised by a program implementation while stepping.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("{0}")]
    Model(String),
    #[error(transparent)]
    Distribution(#[from] DistError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecutionError {
    #[error("guide returned a value outside the support of the distribution at {address}")]
    OutOfSupport { address: Address, partial: Box<Trace> },
    #[error("distribution at {address} rejected its value: {source}")]
    Distribution {
        address: Address,
        source: DistError,
        partial: Box<Trace>,
    },
    #[error("program failed after {} random choices: {source}", partial.entries.len())]
    Program {
        source: ProgramError,
        partial: Box<Trace>,
    },
}

impl ExecutionError {
    /// The trace accumulated before the failure.
    pub fn partial_trace(&self) -> &Trace {
        match self {
            ExecutionError::OutOfSupport { partial, .. }
            | ExecutionError::Distribution { partial, .. }
            | ExecutionError::Program { partial, .. } => partial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UpdateError {
    #[error("reward must be finite, got {0}")]
    NonFiniteReward(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("initial temperature must be positive and finite, got {0}")]
    InitialTemperature(f64),
    #[error("exponential cooling rate must lie in (0, 1), got {0}")]
    ExponentialRate(f64),
    #[error("Lundy-Mees rate must be positive and finite, got {0}")]
    LundyMeesRate(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("model has {count} traces, more than the enumeration limit of {limit}")]
    TooLarge { count: f64, limit: u64 },
    #[error("cannot enumerate {kind} choice at {address}")]
    Unsupported { kind: DistKind, address: Address },
    #[error(transparent)]
    Execution(#[from] ExecutionError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("iterations must be at least 1")]
    NoIterations,
    #[error("search aborted at iteration {iteration}: {source}")]
    Execution {
        iteration: usize,
        source: ExecutionError,
        partial: Box<crate::search::SearchReport>,
    },
    #[error(transparent)]
    Update(#[from] UpdateError),
}
