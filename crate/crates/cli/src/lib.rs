//! Batch front-end for the driven two-oscillator model: run configurations,
//! the four subcommands and their output files.

pub mod artifacts;
pub mod commands;
pub mod config;

use entangle_core::Error;

/// Process exit status for each error class.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::PropagationFailure { .. }
        | Error::InvalidState(_)
        | Error::Singular(_)
        | Error::Shape { .. }
        | Error::IndexOutOfRange { .. } => 3,
        Error::Io(_) => 4,
        Error::Parse(_) => 5,
        Error::Usage(_) => 64,
    }
}
