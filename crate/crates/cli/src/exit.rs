use std::fmt;
use std::process::ExitCode;

use coprguard_core::Error;

pub const OK: u8 = 0;
pub const INFRINGING: u8 = 10;
pub const USAGE: u8 = 64;
pub const DATA: u8 = 65;
pub const NO_INPUT: u8 = 66;
pub const INTERNAL: u8 = 70;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure { code: DATA, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Failure { code: INTERNAL, message: message.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn code_for(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => NO_INPUT,
        Error::Spec { .. } => USAGE,
        Error::Format { .. } | Error::Dimension(_) | Error::Domain(_) | Error::Key(_) | Error::SingularFit(_) | Error::Size(_) => DATA,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: code_for(&e), message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, Failure>;
