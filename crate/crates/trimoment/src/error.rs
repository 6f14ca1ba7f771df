//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by validation and numerical routines in this crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violates a precondition (range, sign, consistency).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A moment sequence is too short for the requested order.
    #[error("moment sequence too short: need index {needed}, have 0..={have}")]
    MomentOutOfRange { needed: usize, have: usize },

    /// Two inputs that must agree in length do not.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// An exact computation was refused because its cost estimate exceeds
    /// the configured budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// A numerical routine failed to reach its target accuracy or produced
    /// a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
