use std::fmt;
use std::process::ExitCode;

use storyexp_core::{ExtractError, LayoutError, ModelError, PersistError};

/// Failure of a subcommand, carrying the module error name shown on stderr.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 1.
    Invalid { name: &'static str, message: String },
    /// Unreadable or unwritable files: exit code 2.
    Io { name: &'static str, message: String },
}

impl CliError {
    pub fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Self::Invalid { name, message: message.into() }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        let message = match e.kind() {
            std::io::ErrorKind::NotFound => format!("{}: no such file or directory", path.display()),
            _ => format!("{}: {e}", path.display()),
        };
        Self::Io { name: "IoError", message }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Invalid { .. } => ExitCode::from(1),
            Self::Io { .. } => ExitCode::from(2),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Invalid { name, .. } | Self::Io { name, .. } => name,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Invalid { name, message } | Self::Io { name, message } => write!(f, "{name}: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<PersistError> for CliError {
    fn from(e: PersistError) -> Self {
        match e {
            PersistError::Io(_) => Self::Io { name: e.name(), message: e.to_string() },
            _ => Self::invalid(e.name(), e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::invalid(e.name(), e.to_string())
    }
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        Self::invalid(e.name(), e.to_string())
    }
}

impl From<ExtractError> for CliError {
    fn from(e: ExtractError) -> Self {
        match e {
            ExtractError::ProviderUnavailable(_) => Self::Io { name: e.name(), message: e.to_string() },
            _ => Self::invalid(e.name(), e.to_string()),
        }
    }
}
