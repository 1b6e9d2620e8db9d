use std::fmt;

/// Top-level command error. The variant decides the process exit code:
/// configuration and input-wiring problems exit 2, everything that goes
/// wrong after the inputs were accepted exits 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

/// Wrap any module error as a runtime failure, keeping its message.
pub fn runtime<E: fmt::Display>(err: E) -> CliError {
    CliError::Runtime(err.to_string())
}

/// Wrap an error as a validation failure, keeping its message.
pub fn validation<E: fmt::Display>(err: E) -> CliError {
    CliError::Validation(err.to_string())
}
