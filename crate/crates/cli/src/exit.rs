use std::fmt;

use cantyp::Error;

pub const USAGE: i32 = 2;
pub const DATA: i32 = 3;
pub const INTERNAL: i32 = 4;

/// An error carrying the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: DATA, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { code: INTERNAL, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidDimension(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::TooLarge(_) => USAGE,
            Error::InvalidState(_) | Error::NotCompletelyPositive { .. } | Error::NotCptp(_) | Error::Json(_) => DATA,
            Error::Inconsistent(_) | Error::Eigen(_) => INTERNAL,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::data(e.to_string())
    }
}
