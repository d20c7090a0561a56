use std::collections::VecDeque;

use sensorloop_core::dps::{DpsConfig, DpsSinkState, ModelUpdateMsg};
use sensorloop_core::protocol::{DpsStatus, SensorProvision, WeatherRule};
use sensorloop_core::rules::{Hysteresis, ScheduleRule};

use super::DashboardError;
use crate::store::check_sensor_id;

pub(super) struct DpsSide {
    pub config: DpsConfig,
    pub sink: DpsSinkState,
}

pub(super) struct ScheduleState {
    pub rule: ScheduleRule,
    /// Unix second from which the rule is due again.
    pub next_evaluation: Option<i64>,
}

pub(super) struct WeatherState {
    pub rule: WeatherRule,
    pub hysteresis: Hysteresis,
    /// Readings since the last comparison, as (unix second, value).
    pub window: Vec<(i64, f64)>,
    pub substituting: bool,
}

/// Everything the dashboard tracks for one sensor. Guarded by one mutex,
/// so requests for the same sensor are handled one at a time and in order.
pub(super) struct SensorActor {
    pub sensor_id: String,
    pub gateway_id: Option<String>,
    pub provision: Option<SensorProvision>,
    pub unit: String,
    pub interval_seconds: Option<u32>,
    pub dps: Option<DpsSide>,
    pub schedule: Option<ScheduleState>,
    pub weather: Option<WeatherState>,
    pub last_tick: Option<i64>,
    /// Operator commands waiting to ride along with this sensor's next
    /// acknowledgement (or a gateway poll).
    pub outbox: VecDeque<u64>,
}

impl SensorActor {
    /// A sensor seen only through ingestion, with no gateway or rules.
    pub fn unprovisioned(sensor_id: &str, unit: &str) -> Self {
        Self {
            sensor_id: sensor_id.to_string(),
            gateway_id: None,
            provision: None,
            unit: unit.to_string(),
            interval_seconds: None,
            dps: None,
            schedule: None,
            weather: None,
            last_tick: None,
            outbox: VecDeque::new(),
        }
    }

    pub fn provisioned(gateway_id: &str, p: &SensorProvision) -> Self {
        Self {
            sensor_id: p.sensor_id.clone(),
            gateway_id: Some(gateway_id.to_string()),
            provision: Some(p.clone()),
            unit: p.unit.clone(),
            interval_seconds: Some(p.initial_interval_seconds),
            dps: p.dps.clone().map(|config| DpsSide { sink: DpsSinkState::new(&config), config }),
            schedule: p.schedule.clone().map(|rule| ScheduleState { rule, next_evaluation: None }),
            weather: p.weather.clone().map(|rule| WeatherState {
                hysteresis: Hysteresis::new(rule.policy.hysteresis_windows),
                rule,
                window: Vec::new(),
                substituting: false,
            }),
            last_tick: None,
            outbox: VecDeque::new(),
        }
    }

    pub fn substituting(&self) -> bool {
        self.weather.as_ref().is_some_and(|w| w.substituting)
    }

    pub fn dps_status(&self) -> Option<DpsStatus> {
        self.dps.as_ref().map(|d| DpsStatus {
            phase: d.sink.phase,
            tick: d.sink.tick,
            threshold_epsilon: d.config.threshold_epsilon,
            model: d.sink.model.as_ref().map(|m| ModelUpdateMsg::from_model(m, d.sink.model_origin.unwrap_or(0))),
        })
    }
}

pub(super) fn validate_provision(p: &SensorProvision) -> Result<(), DashboardError> {
    let invalid = |m: String| Err(DashboardError::Invalid(format!("sensor {}: {m}", p.sensor_id)));
    check_sensor_id(&p.sensor_id).map_err(|e| DashboardError::Invalid(e.to_string()))?;
    if p.initial_interval_seconds == 0 {
        return invalid("initial_interval_seconds must be positive".into());
    }
    if let Some(dps) = &p.dps {
        if let Err(e) = dps.validate() {
            return invalid(e.to_string());
        }
    }
    if let Some(rule) = &p.schedule {
        if let Err(e) = rule.validate() {
            return invalid(e.to_string());
        }
    }
    if let Some(w) = &p.weather {
        if w.location.is_empty() {
            return invalid("weather location is empty".into());
        }
        if let Err(e) = w.policy.validate() {
            return invalid(e.to_string());
        }
        if p.dps.is_some() {
            return invalid("a sensor cannot combine DPS with weather substitution".into());
        }
    }
    Ok(())
}
