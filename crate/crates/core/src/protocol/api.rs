//! Bodies of the dashboard's HTTP endpoints.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Measurement, Provenance, ProtocolError, ReconfigCommand, Topic};
use crate::dps::{DpsConfig, ModelUpdateMsg, Phase};
use crate::rules::{RelevancePolicy, RelevanceVerdict, ScheduleRule};

/// Weather agreement rule attached to a sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherRule {
    pub location: String,
    #[serde(default)]
    pub policy: RelevancePolicy,
}

/// What the dashboard needs to know about a sensor behind a gateway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorProvision {
    pub sensor_id: String,
    #[serde(default = "default_unit")]
    pub unit: String,
    pub initial_interval_seconds: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dps: Option<DpsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weather: Option<WeatherRule>,
}

fn default_unit() -> String {
    "C".into()
}

/// `POST /gateways`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayRegistration {
    pub gateway_id: String,
    pub sensors: Vec<SensorProvision>,
}

/// `POST /slots`: a scheduled sample of a DPS sensor passed without a
/// transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotNotice {
    pub sensor_id: String,
    pub tick: i64,
    pub wallclock: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchedCommand {
    pub command_id: u64,
    pub command: ReconfigCommand,
}

/// Reply to `POST /measurements` and `POST /slots`. Commands queued for the
/// sender's gateway ride along.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestAck {
    pub seq: u64,
    pub stored_as: Provenance,
    pub value: f64,
    #[serde(default)]
    pub commands: Vec<DispatchedCommand>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryStatus {
    Queued,
    Applied,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryReport {
    pub command_id: u64,
    pub gateway_id: String,
    pub target_sensor_id: String,
    pub status: DeliveryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// `POST /reconfig/{id}/ack`, sent by the gateway once the node acted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandAck {
    pub applied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub sensor_id: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wallclock: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub seq: u64,
    pub sensor_id: String,
    pub description: String,
    pub recorded_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub ingested: u64,
    pub sensed_stored: u64,
    /// Values stored on behalf of suppressed transmissions.
    pub reconstructed_stored: u64,
    pub weather_stored: u64,
    pub conflicts: u64,
    pub events_published: u64,
    pub events_delivered: u64,
    pub events_dropped: u64,
    pub listeners: u64,
    pub commands_dispatched: u64,
    pub failures: u64,
}

/// A stored measurement with its storage sequence number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredMeasurement {
    pub seq: u64,
    #[serde(flatten)]
    pub measurement: Measurement,
}

/// `GET /series?sensor=..&from=..&to=..`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResponse {
    pub sensor_id: String,
    pub from: i64,
    pub to: i64,
    pub points: Vec<StoredMeasurement>,
}

/// `POST /listeners`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subscription {
    pub listener_id: String,
    /// `host:port` of a stream socket the dashboard connects to.
    pub endpoint: String,
    pub topics: BTreeSet<Topic>,
}

impl Subscription {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.listener_id.is_empty() {
            return Err(ProtocolError::EmptySensorId);
        }
        if self.topics.is_empty() {
            return Err(ProtocolError::EmptyCommand);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscriptionAck {
    pub subscription_id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Schedule,
    Weather,
    DpsRefresh,
}

/// Body of `analysis` events: one evaluation of a rule or a model refresh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleDecision {
    pub sensor_id: String,
    pub wallclock: DateTime<Utc>,
    pub rule: RuleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<RelevanceVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<ReconfigCommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A command and what became of it. Body of `reconfiguration` events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub command_id: u64,
    pub gateway_id: String,
    pub command: ReconfigCommand,
    pub status: DeliveryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CommandRecord {
    pub fn report(&self) -> DeliveryReport {
        DeliveryReport {
            command_id: self.command_id,
            gateway_id: self.gateway_id.clone(),
            target_sensor_id: self.command.target_sensor_id.clone(),
            status: self.status,
            detail: self.detail.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpsStatus {
    pub phase: Phase,
    pub tick: u64,
    pub threshold_epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelUpdateMsg>,
}

/// `GET /sensors/{id}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorStatus {
    pub sensor_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gateway_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_seconds: Option<u32>,
    pub substituting: bool,
    pub stored: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_tick: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dps: Option<DpsStatus>,
}
