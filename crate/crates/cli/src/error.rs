use std::fmt;

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    CheckFailed = 1,
    InvalidInput = 2,
    Capacity = 3,
    Solver = 4,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            status: Status::InvalidInput,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<coalloc_core::Error> for CliError {
    fn from(err: coalloc_core::Error) -> Self {
        use coalloc_core::Error as E;
        let status = match err {
            E::VertexCap { .. } | E::EnumerationCap { .. } => Status::Capacity,
            E::SolverFailure(_) | E::NotOptimal(_) | E::Internal(_) => Status::Solver,
            _ => Status::InvalidInput,
        };
        Self {
            status,
            message: err.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
