// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),

    #[error("invalid gamble: {0}")]
    InvalidGamble(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid rate matrix: {0}")]
    InvalidRateMatrix(String),

    #[error("infeasible row intervals at row {row}: {reason}")]
    InfeasibleRowIntervals { row: usize, reason: String },

    #[error("invalid rate interval: {0}")]
    InvalidRateInterval(String),

    #[error("operation requires a non-negative integer state space")]
    WrongSpaceKind,

    #[error("empty set of rate matrices")]
    EmptyEnvelope,

    #[error("step {step} too large: step times rate bound {rate} exceeds 1")]
    StepTooLarge { step: f64, rate: f64 },

    #[error("invalid engine configuration: {0}")]
    InvalidEngine(String),

    #[error(
        "Euler product did not converge within {max_steps} steps (last change {last_change:e})"
    )]
    NoConvergence { max_steps: u64, last_change: f64 },

    #[error("gamble is not {0}")]
    NotMonotone(&'static str),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("table of {0} entries exceeds the dense-table cap")]
    TableTooLarge(u128),

    #[error("invalid initial upper expectation: {0}")]
    InvalidInitial(String),

    #[error("jump gamble needs two distinct times")]
    EqualTimes,

    #[error("family is not monotone: {0}")]
    MonotonicityViolation(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("{0}")]
    Unsupported(String),
}
