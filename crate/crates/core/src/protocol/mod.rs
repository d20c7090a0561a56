//! Records exchanged between sensor nodes, gateways and the dashboard.

mod api;
mod events;

pub use api::*;
pub use events::{encode_frame, read_frame, EventEnvelope, Topic, MAX_FRAME_BYTES};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dps::ModelUpdateMsg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("sensor id must not be empty")]
    EmptySensorId,
    #[error("measurement value must be finite")]
    NonFiniteValue,
    #[error("command sets no field")]
    EmptyCommand,
    #[error("sampling interval must be positive")]
    InvalidInterval,
    #[error("threshold must be a positive number")]
    InvalidThreshold,
    #[error("model update rejected: {0}")]
    InvalidModel(String),
}

/// Where a stored value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Sensed,
    DpsReconstructed,
    WeatherForecast,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Sensed => "sensed",
            Provenance::DpsReconstructed => "dps_reconstructed",
            Provenance::WeatherForecast => "weather_forecast",
        }
    }
}

/// One timestamped reading. `tick` is the simulated second of the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub sensor_id: String,
    pub tick: i64,
    pub wallclock: DateTime<Utc>,
    pub value: f64,
    pub unit: String,
    pub provenance: Provenance,
}

impl Measurement {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.sensor_id.is_empty() {
            return Err(ProtocolError::EmptySensorId);
        }
        if !self.value.is_finite() {
            return Err(ProtocolError::NonFiniteValue);
        }
        Ok(())
    }
}

/// Which source replaces the node's own readings in the store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstituteSource {
    None,
    WeatherForecast,
}

/// An instruction for one sensor node. Unset fields leave the node's
/// current setting alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconfigCommand {
    pub target_sensor_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_interval_seconds: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_update: Option<ModelUpdateMsg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substitute_source: Option<SubstituteSource>,
}

impl ReconfigCommand {
    pub fn new(target_sensor_id: impl Into<String>) -> Self {
        Self {
            target_sensor_id: target_sensor_id.into(),
            set_interval_seconds: None,
            model_update: None,
            threshold_epsilon: None,
            substitute_source: None,
        }
    }

    pub fn with_interval(mut self, seconds: u32) -> Self {
        self.set_interval_seconds = Some(seconds);
        self
    }

    pub fn with_model(mut self, msg: ModelUpdateMsg) -> Self {
        self.model_update = Some(msg);
        self
    }

    pub fn with_threshold(mut self, epsilon: f64) -> Self {
        self.threshold_epsilon = Some(epsilon);
        self
    }

    pub fn with_substitute(mut self, source: SubstituteSource) -> Self {
        self.substitute_source = Some(source);
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.target_sensor_id.is_empty() {
            return Err(ProtocolError::EmptySensorId);
        }
        if self.set_interval_seconds.is_none()
            && self.model_update.is_none()
            && self.threshold_epsilon.is_none()
            && self.substitute_source.is_none()
        {
            return Err(ProtocolError::EmptyCommand);
        }
        if self.set_interval_seconds == Some(0) {
            return Err(ProtocolError::InvalidInterval);
        }
        if let Some(eps) = self.threshold_epsilon {
            if eps.is_nan() || eps <= 0.0 {
                return Err(ProtocolError::InvalidThreshold);
            }
        }
        if let Some(msg) = &self.model_update {
            msg.to_model().validate().map_err(|e| ProtocolError::InvalidModel(e.to_string()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_command_rejected() {
        assert_eq!(ReconfigCommand::new("n1").validate(), Err(ProtocolError::EmptyCommand));
        assert!(ReconfigCommand::new("n1").with_interval(120).validate().is_ok());
        assert_eq!(ReconfigCommand::new("n1").with_interval(0).validate(), Err(ProtocolError::InvalidInterval));
        assert_eq!(
            ReconfigCommand::new("n1").with_threshold(-1.0).validate(),
            Err(ProtocolError::InvalidThreshold)
        );
    }

    #[test]
    fn measurement_invariants() {
        let mut m = Measurement {
            sensor_id: "n1".into(),
            tick: 0,
            wallclock: DateTime::UNIX_EPOCH,
            value: 20.0,
            unit: "C".into(),
            provenance: Provenance::Sensed,
        };
        assert!(m.validate().is_ok());
        m.value = f64::NAN;
        assert_eq!(m.validate(), Err(ProtocolError::NonFiniteValue));
    }

    #[test]
    fn wire_names() {
        let json = serde_json::to_string(&Provenance::DpsReconstructed).unwrap();
        assert_eq!(json, "\"dps_reconstructed\"");
        let cmd = ReconfigCommand::new("n1").with_substitute(SubstituteSource::WeatherForecast);
        assert_eq!(
            serde_json::to_string(&cmd).unwrap(),
            r#"{"target_sensor_id":"n1","substitute_source":"weather_forecast"}"#
        );
    }
}
