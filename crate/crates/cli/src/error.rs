//! CLI error type carrying the process exit code.

use std::fmt;

/// Exit code 1 for validation problems (config, schema, thresholds),
/// exit code 2 for computation failures.
#[derive(Debug)]
pub enum AppError {
    Validation(String),
    Computation(String),
}

impl AppError {
    pub fn validation(msg: impl Into<String>) -> Self {
        Self::Validation(msg.into())
    }

    pub fn computation(msg: impl Into<String>) -> Self {
        Self::Computation(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Computation(_) => 2,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "validation error: {m}"),
            Self::Computation(m) => write!(f, "computation error: {m}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<denmatch_core::Error> for AppError {
    fn from(e: denmatch_core::Error) -> Self {
        Self::Computation(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        Self::Computation(format!("io: {e}"))
    }
}
