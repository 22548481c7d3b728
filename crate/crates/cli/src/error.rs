use serde_json::json;
use thiserror::Error;

/// Failure of a subcommand. Each variant has a fixed process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Backend(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Parse(_) => "parse",
            CliError::Backend(_) => "backend",
        }
    }

    /// Single-line JSON used with `--json-errors`.
    pub fn to_json(&self) -> String {
        json!({"error": {"kind": self.kind(), "code": self.exit_code(), "message": self.to_string()}})
            .to_string()
    }
}

pub fn io(context: impl std::fmt::Display, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{context}: {e}"))
}

impl From<nl2stl_core::pipeline::StoreError> for CliError {
    fn from(e: nl2stl_core::pipeline::StoreError) -> Self {
        match e {
            nl2stl_core::pipeline::StoreError::Io { .. } => CliError::Io(e.to_string()),
            nl2stl_core::pipeline::StoreError::Corrupt { .. } => CliError::Parse(e.to_string()),
        }
    }
}

impl From<nl2stl_core::llm::BackendError> for CliError {
    fn from(e: nl2stl_core::llm::BackendError) -> Self {
        match e {
            nl2stl_core::llm::BackendError::Config(m) => CliError::Usage(format!("backend config: {m}")),
            other => CliError::Backend(other.to_string()),
        }
    }
}

impl From<nl2stl_core::synthesis::SynthError> for CliError {
    fn from(e: nl2stl_core::synthesis::SynthError) -> Self {
        match e {
            nl2stl_core::synthesis::SynthError::ConfigInvalid(_) => CliError::Usage(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}
