use std::fmt;

/// CLI-level error with a process exit code: 2 for configuration problems,
/// 3 for file problems, 4 for numeric failures.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<linf_core::Error> for CliError {
    fn from(error: linf_core::Error) -> Self {
        use linf_core::Error;
        match error {
            Error::Config(_) | Error::InvalidArgument(_) | Error::DimensionMismatch(_) => {
                CliError::Config(error.to_string())
            }
            Error::Io { .. } | Error::Parse { .. } => CliError::Io(error.to_string()),
            Error::Numeric(_) => CliError::Numeric(error.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(error: serde_json::Error) -> Self {
        CliError::Io(format!("JSON serialization failed: {error}"))
    }
}
