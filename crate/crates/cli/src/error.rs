use sensorloop_sim::gateway::GatewayError;
use sensorloop_sim::{ReportError, ScenarioError, SimError};
use thiserror::Error;

/// Failure of a subcommand, grouped by what the operator has to fix.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad scenario, trace, configuration or flag.
    #[error("{0}")]
    Validation(String),
    /// The dashboard or weather service could not be reached, refused a
    /// request, or a port was taken.
    #[error("{0}")]
    Transport(String),
    /// The forecasting side failed.
    #[error("{0}")]
    Fit(String),
    #[error("{0}")]
    Io(String),
    /// A report's summary does not match its logs.
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Transport(_) => 3,
            CliError::Fit(_) => 4,
            CliError::Io(_) => 5,
            CliError::Mismatch(_) => 6,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Transport(_) => "transport",
            CliError::Fit(_) => "fit",
            CliError::Io(_) => "io",
            CliError::Mismatch(_) => "mismatch",
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Scenario(e) => e.into(),
            SimError::Signal { .. } => CliError::Validation(e.to_string()),
            SimError::Dps { .. } => CliError::Fit(e.to_string()),
            SimError::Gateway(GatewayError::Transport { .. } | GatewayError::Rejected { .. }) => {
                CliError::Transport(e.to_string())
            }
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Io { .. } => CliError::Io(e.to_string()),
            ReportError::Format { .. } => CliError::Validation(e.to_string()),
        }
    }
}
