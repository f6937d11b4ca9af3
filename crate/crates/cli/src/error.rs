//! Error classification for exit codes: 1 config, 2 data, 3 numerical.

use std::fmt;

use randcast_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or usage (exit code 1).
    Config(String),
    /// Unreadable or inconsistent data (exit code 2).
    Data(String),
    /// Numerical failure during training or evaluation (exit code 3).
    Numerical(String),
}

impl CliError {
    pub fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. } | CoreError::InvalidAngle(_) | CoreError::EmptyGrid => {
                Self::Config(e.to_string())
            }
            CoreError::NonFinite(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::EmptyPool
            | CoreError::EmptySubsample => Self::Numerical(e.to_string()),
            other => Self::Data(other.to_string()),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            Self::Data(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(msg) => write!(f, "config: {msg}"),
            Self::Data(msg) => write!(f, "data: {msg}"),
            Self::Numerical(msg) => write!(f, "numerical: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        Self::from_core(e)
    }
}
