//! Process exit codes.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | unexpected internal failure |
//! | 2 | invalid arguments or parameters |
//! | 3 | I/O failure or unreadable file contents |
//! | 4 | region larger than the embedding capacity |
//! | 5 | solver did not converge (output still written) |

use std::fmt;

use cspriv_core::Error as CoreError;

pub const USAGE: u8 = 2;
pub const IO: u8 = 3;
pub const CAPACITY: u8 = 4;
pub const NOT_CONVERGED: u8 = 5;

/// Invalid command-line input detected after parsing.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// The reconstruction was written but at least one solve hit its budget.
#[derive(Debug)]
pub struct NotConverged;

impl fmt::Display for NotConverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("solver did not reach tolerance within the iteration budget")
    }
}

impl std::error::Error for NotConverged {}

fn core_code(e: &CoreError) -> u8 {
    match e {
        CoreError::CapacityExceeded { .. } => CAPACITY,
        CoreError::MalformedKeyFile(_)
        | CoreError::MalformedPayload(_)
        | CoreError::MalformedImage(_)
        | CoreError::UnsupportedVersion(_) => IO,
        _ => USAGE,
    }
}

/// Exit code for an error, from the first recognised cause in its chain.
pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return USAGE;
        }
        if cause.is::<NotConverged>() {
            return NOT_CONVERGED;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return core_code(e);
        }
        if cause.is::<std::io::Error>() || cause.is::<image::ImageError>() {
            return IO;
        }
    }
    1
}
