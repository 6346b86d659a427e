use std::path::Path;

use thiserror::Error;

/// Failure of a command, classified by the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent configuration and inputs.
    #[error("configuration error: {0}")]
    Config(String),
    /// A control outside the envelope, or a planner that failed to produce a
    /// plan on some tick.
    #[error("{0}")]
    Infeasible(String),
    /// Divergent rollouts, degenerate fits and other numerical breakdowns.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Infeasible(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{}: {e}", path.display()))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
