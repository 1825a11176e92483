//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation was asked to run from a state it cannot handle.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// An operation legitimately produced nothing (e.g. editing removed
    /// every point) and the caller must decide how to proceed.
    #[error("empty result: {0}")]
    EmptyResult(String),

    /// The requested search space exceeds the configured cap.
    #[error("capacity exceeded: {required} candidates requested, cap is {cap}")]
    Capacity { required: u128, cap: u64 },

    /// No feasible solution exists (e.g. duplicate coordinates carrying
    /// conflicting labels make a consistent subset impossible).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A numeric guard tripped (non-finite likelihood or similar).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A file could not be parsed; `line` is 1-based and includes the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
