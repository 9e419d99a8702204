use std::fmt;
use std::process::ExitCode;

use prediagnose::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag values.
    Usage(String),
    /// Unreadable or ill-formed files.
    Data(String),
    Core(Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_training_failure() => 3,
            CliError::Data(_) | CliError::Core(_) => 2,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => f.write_str(msg),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}
