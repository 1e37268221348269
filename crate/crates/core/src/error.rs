//! Error type shared by every solver in the crate.

use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Graph description violates a structural invariant.
    InvalidGraph(String),
    /// Argument outside an operation's domain.
    InvalidInput(String),
    /// Denominator of the compatibility step vanished for the given child.
    SingularModel { child: usize },
    /// Exact enumeration refused: the vertex count exceeds the guard.
    TooLarge { vertices: usize, limit: usize },
    /// A solver that must produce at least one solution came back empty.
    EmptySolutionSet,
    /// No phase transition located up to the given activity.
    NoTransition { lambda_max: f64 },
    /// An internal cross-check failed; this signals a bug, not model behaviour.
    Inconsistent(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGraph(msg) => write!(f, "invalid constraint graph: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::SingularModel { child } => {
                write!(f, "singular model: zero step denominator at child {child}")
            }
            Error::TooLarge { vertices, limit } => {
                write!(f, "tree too large for exact work: {vertices} vertices > {limit}")
            }
            Error::EmptySolutionSet => write!(f, "solver returned no solutions"),
            Error::NoTransition { lambda_max } => {
                write!(f, "no transition found for lambda up to {lambda_max}")
            }
            Error::Inconsistent(msg) => write!(f, "internal consistency check failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
