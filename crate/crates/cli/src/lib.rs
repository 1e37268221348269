//! Command implementations, file formats and scan plumbing behind the
//! `treegibbs` binary. Everything here is deterministic: identical flags
//! produce byte-identical output, and scan rows are emitted in grid order
//! no matter how the worker pool schedules them.

// `!(x > 0.0)` rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod graphjson;
pub mod output;
pub mod range;

/// Process exit codes: 0 success, 2 usage error, 3 numerical-certificate
/// failure.
#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Certificate(String),
    Io(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => 2,
            CmdError::Certificate(_) => 3,
            CmdError::Io(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Certificate(m) | CmdError::Io(m) => m,
        }
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CmdError {}

/// Core errors signal bad input (usage) or a failed numerical guarantee.
pub fn from_core(err: treegibbs_core::Error) -> CmdError {
    use treegibbs_core::Error as E;
    match err {
        E::InvalidInput(_) | E::InvalidGraph(_) | E::TooLarge { .. } => {
            CmdError::Usage(err.to_string())
        }
        E::EmptySolutionSet | E::NoTransition { .. } | E::Inconsistent(_)
        | E::SingularModel { .. } => CmdError::Certificate(err.to_string()),
    }
}
