use std::fmt;

use memelabel_agents::{AgentError, ConfigError};
use memelabel_core::dataset::DatasetError;
use memelabel_core::metrics::MetricError;
use memelabel_pipeline::PipelineError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    pub fn validation(message: impl fmt::Display) -> Self {
        CliError { code: EXIT_VALIDATION, message: message.to_string() }
    }

    pub fn runtime(message: impl fmt::Display) -> Self {
        CliError { code: EXIT_RUNTIME, message: message.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match &e {
            DatasetError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::usage(e.to_string())
            }
            DatasetError::Io { .. } => CliError::runtime(e),
            _ => CliError::validation(e),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Degenerate { .. } | MetricError::EmptyIntersection => {
                CliError { code: EXIT_DEGENERATE, message: e.to_string() }
            }
            _ => CliError::validation(e),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match &e {
            ConfigError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::usage(e.to_string())
            }
            _ => CliError::validation(e),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::RunExists(_) | PipelineError::NotARun(_) | PipelineError::Argument(_) => {
                CliError::usage(e.to_string())
            }
            PipelineError::ManifestChanged { .. } | PipelineError::ScopeChanged { .. } => CliError::validation(e),
            PipelineError::Dataset(d) => d.into(),
            PipelineError::Agent(AgentError::Config(c)) => c.into(),
            PipelineError::Agent(AgentError::Prompt(p)) => CliError::validation(p),
            other => CliError::runtime(other),
        }
    }
}
