//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "two-rooms"
//! seed = 7
//! duration_seconds = 3600
//! start = "2016-06-07T09:00:00Z"
//!
//! [dps]
//! threshold_epsilon = 0.5
//!
//! [[nodes]]
//! sensor_id = "room-1"
//! initial_interval_seconds = 60
//! dps_enabled = true
//! signal = { kind = "synthetic", base_level = 21.0, daily_amplitude = 3.0, noise_std = 0.1 }
//!
//! [[nodes]]
//! sensor_id = "room-2"
//! initial_interval_seconds = 60
//! signal = { kind = "trace_file", path = "traces/room2.csv" }
//! ```
//!
//! Relative paths (trace files, weather fixtures) are resolved against the
//! directory of the scenario file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeZone, Utc};
use sensorloop_core::dps::DpsConfig;
use sensorloop_core::protocol::{SensorProvision, WeatherRule};
use sensorloop_core::rules::ScheduleRule;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyModel;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub duration_seconds: u64,
    /// Wallclock of simulated second 0, as an RFC 3339 string.
    #[serde(default = "default_start")]
    pub start: DateTime<Utc>,
    #[serde(default = "default_gateway")]
    pub gateway_id: String,
    /// Shared by every node with `dps_enabled`.
    #[serde(default)]
    pub dps: DpsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weather: Option<WeatherFixtures>,
    pub nodes: Vec<NodeConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2016, 6, 7, 0, 0, 0).unwrap()
}

fn default_gateway() -> String {
    "gw-1".into()
}

/// Where the stub weather service finds its `<location>.csv` files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherFixtures {
    pub fixtures_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub sensor_id: String,
    #[serde(default = "default_unit")]
    pub unit: String,
    pub initial_interval_seconds: u32,
    #[serde(default)]
    pub dps_enabled: bool,
    pub signal: SignalSource,
    #[serde(default)]
    pub energy: EnergyModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weather: Option<WeatherRule>,
}

fn default_unit() -> String {
    "C".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSource {
    /// `base_level + daily_amplitude * sin(2 pi t / 86400)` plus Gaussian
    /// noise. The noise stream depends on the scenario seed and on `seed`,
    /// which defaults to the node's position in the file.
    Synthetic {
        base_level: f64,
        #[serde(default)]
        daily_amplitude: f64,
        #[serde(default)]
        noise_std: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    TraceFile {
        path: PathBuf,
        #[serde(default = "default_time_column")]
        time_column: String,
        #[serde(default = "default_value_column")]
        value_column: String,
    },
}

fn default_time_column() -> String {
    "timestamp".into()
}

fn default_value_column() -> String {
    "value".into()
}

impl ScenarioConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ScenarioError> {
        let base_dir = base_dir.into();
        let mut config: ScenarioConfig = toml::from_str(text)
            .map_err(|e| ScenarioError::Parse { path: base_dir.clone(), message: e.to_string() })?;
        config.base_dir = base_dir;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a scenario file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base_dir).map_err(|e| match e {
            ScenarioError::Parse { message, .. } => ScenarioError::Parse { path: path.into(), message },
            other => other,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn fixtures_dir(&self) -> Option<PathBuf> {
        self.weather.as_ref().map(|w| self.resolve(&w.fixtures_dir))
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut errors = Vec::new();
        if self.name.trim().is_empty() {
            errors.push("name is empty".to_string());
        }
        if self.duration_seconds == 0 {
            errors.push("duration_seconds must be positive".into());
        }
        if self.gateway_id.trim().is_empty() {
            errors.push("gateway_id is empty".into());
        }
        if self.nodes.is_empty() {
            errors.push("no nodes".into());
        }
        if self.nodes.iter().any(|n| n.dps_enabled) {
            if let Err(e) = self.dps.validate() {
                errors.push(format!("dps: {e}"));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let at = format!("nodes[{i}] ({})", node.sensor_id);
            if !valid_sensor_id(&node.sensor_id) {
                errors.push(format!("{at}: sensor_id must be 1-128 characters of [A-Za-z0-9_.-]"));
            }
            if !seen.insert(node.sensor_id.as_str()) {
                errors.push(format!("{at}: duplicate sensor_id"));
            }
            if node.initial_interval_seconds == 0 {
                errors.push(format!("{at}: initial_interval_seconds must be positive"));
            }
            match &node.signal {
                SignalSource::Synthetic { base_level, daily_amplitude, noise_std, .. } => {
                    if !base_level.is_finite() || !daily_amplitude.is_finite() {
                        errors.push(format!("{at}: signal levels must be finite"));
                    }
                    if !(noise_std.is_finite() && *noise_std >= 0.0) {
                        errors.push(format!("{at}: noise_std must be finite and >= 0"));
                    }
                }
                SignalSource::TraceFile { path, .. } => {
                    if !self.resolve(path).is_file() {
                        errors.push(format!("{at}: trace file {} not found", self.resolve(path).display()));
                    }
                }
            }
            errors.extend(node.energy.problems().into_iter().map(|p| format!("{at}: energy: {p}")));
            if let Some(rule) = &node.schedule {
                if let Err(e) = rule.validate() {
                    errors.push(format!("{at}: schedule: {e}"));
                }
            }
            if let Some(rule) = &node.weather {
                if rule.location.is_empty() {
                    errors.push(format!("{at}: weather location is empty"));
                }
                if let Err(e) = rule.policy.validate() {
                    errors.push(format!("{at}: weather: {e}"));
                }
                if node.dps_enabled {
                    errors.push(format!("{at}: DPS and weather substitution cannot be combined"));
                }
            }
        }
        if let Some(dir) = self.fixtures_dir() {
            if !dir.is_dir() {
                errors.push(format!("weather fixtures_dir {} not found", dir.display()));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(errors))
        }
    }

    /// What the gateway announces to the dashboard for each node.
    pub fn provisions(&self) -> Vec<SensorProvision> {
        self.nodes
            .iter()
            .map(|n| SensorProvision {
                sensor_id: n.sensor_id.clone(),
                unit: n.unit.clone(),
                initial_interval_seconds: n.initial_interval_seconds,
                dps: n.dps_enabled.then(|| self.dps.clone()),
                schedule: n.schedule.clone(),
                weather: n.weather.clone(),
            })
            .collect()
    }
}

fn valid_sensor_id(id: &str) -> bool {
    (1..=128).contains(&id.len())
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
duration_seconds = 60
[[nodes]]
sensor_id = "a"
initial_interval_seconds = 60
signal = { kind = "synthetic", base_level = 20.0 }
"#;

    #[test]
    fn minimal_file_takes_defaults() {
        let c = ScenarioConfig::parse(MINIMAL, ".").unwrap();
        assert_eq!(c.gateway_id, "gw-1");
        assert_eq!(c.nodes[0].unit, "C");
        assert_eq!(c.nodes[0].energy, EnergyModel::default());
        assert!(!c.nodes[0].dps_enabled);
    }

    #[test]
    fn all_violations_are_listed() {
        let text = r#"
name = ""
duration_seconds = 0
[[nodes]]
sensor_id = "a"
initial_interval_seconds = 0
signal = { kind = "synthetic", base_level = 20.0, noise_std = -1.0 }
[[nodes]]
sensor_id = "a"
initial_interval_seconds = 60
signal = { kind = "trace_file", path = "missing.csv" }
energy = { battery_joules = 0.0 }
"#;
        let Err(ScenarioError::Invalid(errors)) = ScenarioConfig::parse(text, "/nonexistent") else { panic!() };
        for needle in ["name", "duration", "initial_interval", "noise_std", "duplicate", "trace file", "battery"] {
            assert!(errors.iter().any(|e| e.contains(needle)), "{needle} missing from {errors:?}");
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("duration_seconds", "duration_secs");
        assert!(matches!(ScenarioConfig::parse(&text, "."), Err(ScenarioError::Parse { .. })));
    }
}
