//! Report bundles: a JSON summary plus the per-tick CSV logs it was
//! computed from.
//!
//! | file            | content                                        |
//! |-----------------|------------------------------------------------|
//! | `summary.json`  | [`SimReport`]                                  |
//! | `scenario.json` | the scenario that was run, seed included       |
//! | `ticks.csv`     | one row per sample: value, transmission, stored value |
//! | `commands.csv`  | every reconfiguration command a node received  |
//! | `intervals.csv` | sampling interval in force from each time on   |
//! | `failures.csv`  | battery depletions                             |

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use sensorloop_core::protocol::{Provenance, SubstituteSource};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::ScenarioConfig;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub sensor_id: String,
    pub samples_taken: u64,
    pub transmissions: u64,
    pub suppressions: u64,
    pub receptions: u64,
    pub energy_spent_joules: f64,
    /// Largest |true - stored| over points the node itself produced
    /// (weather substitutions excluded).
    pub max_reconstruction_error: f64,
    pub halted_at_s: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: String,
    pub seed: u64,
    pub duration_seconds: u64,
    pub nodes: Vec<NodeReport>,
    pub total_samples: u64,
    pub total_tx: u64,
    /// Transmissions without DPS: one per sample.
    pub baseline_tx: u64,
    pub tx_reduction_ratio: f64,
    /// Host time the run took. Not part of the bundle, which has to be
    /// reproducible.
    #[serde(skip)]
    pub runtime: Option<Duration>,
}

impl SimReport {
    pub fn new(scenario: &ScenarioConfig, nodes: Vec<NodeReport>) -> Self {
        let total_samples = nodes.iter().map(|n| n.samples_taken).sum();
        let total_tx = nodes.iter().map(|n| n.transmissions).sum();
        Self {
            scenario: scenario.name.clone(),
            seed: scenario.seed,
            duration_seconds: scenario.duration_seconds,
            nodes,
            total_samples,
            total_tx,
            baseline_tx: total_samples,
            tx_reduction_ratio: reduction_ratio(total_tx, total_samples),
            runtime: None,
        }
    }

    pub fn node(&self, sensor_id: &str) -> Option<&NodeReport> {
        self.nodes.iter().find(|n| n.sensor_id == sensor_id)
    }
}

pub fn reduction_ratio(transmissions: u64, baseline: u64) -> f64 {
    if baseline == 0 {
        0.0
    } else {
        1.0 - transmissions as f64 / baseline as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRow {
    pub time_s: u64,
    pub sensor_id: String,
    pub value: f64,
    pub transmitted: bool,
    pub stored_as: Provenance,
    pub stored_value: f64,
    /// After everything the sample caused, commands included.
    pub battery_joules: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRow {
    pub time_s: u64,
    pub sensor_id: String,
    pub interval_s: Option<u32>,
    pub model: Option<String>,
    pub model_origin_tick: Option<u64>,
    pub threshold: Option<f64>,
    pub substitute: Option<SubstituteSource>,
    pub applied: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub time_s: u64,
    pub sensor_id: String,
    pub interval_s: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub time_s: u64,
    pub sensor_id: String,
    pub description: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLogs {
    pub ticks: Vec<TickRow>,
    pub commands: Vec<CommandRow>,
    pub intervals: Vec<IntervalRow>,
    pub failures: Vec<FailureRow>,
}

impl RunLogs {
    /// Interval changes of one sensor, as (time, interval), initial value
    /// first.
    pub fn interval_log(&self, sensor_id: &str) -> Vec<(u64, u32)> {
        self.intervals.iter().filter(|r| r.sensor_id == sensor_id).map(|r| (r.time_s, r.interval_s)).collect()
    }
}

/// Recomputes the summary from the logs alone.
pub fn summarize(scenario: &ScenarioConfig, logs: &RunLogs) -> SimReport {
    #[derive(Default)]
    struct Acc {
        samples: u64,
        tx: u64,
        rx: u64,
        max_err: f64,
        halted: Option<u64>,
    }
    let mut acc: BTreeMap<&str, Acc> = BTreeMap::new();
    for row in &logs.ticks {
        let a = acc.entry(&row.sensor_id).or_default();
        a.samples += 1;
        a.tx += u64::from(row.transmitted);
        if row.stored_as != Provenance::WeatherForecast {
            a.max_err = a.max_err.max((row.value - row.stored_value).abs());
        }
    }
    for row in &logs.commands {
        acc.entry(&row.sensor_id).or_default().rx += 1;
    }
    for row in &logs.failures {
        let a = acc.entry(&row.sensor_id).or_default();
        a.halted = Some(a.halted.map_or(row.time_s, |h| h.min(row.time_s)));
    }
    let nodes = scenario
        .nodes
        .iter()
        .map(|n| {
            let a = acc.remove(n.sensor_id.as_str()).unwrap_or_default();
            NodeReport {
                sensor_id: n.sensor_id.clone(),
                samples_taken: a.samples,
                transmissions: a.tx,
                suppressions: a.samples - a.tx,
                receptions: a.rx,
                energy_spent_joules: n.energy.spent(a.samples, a.tx, a.rx),
                max_reconstruction_error: a.max_err,
                halted_at_s: a.halted,
            }
        })
        .collect();
    SimReport::new(scenario, nodes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub report: SimReport,
    pub scenario: ScenarioConfig,
    pub logs: RunLogs,
}

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> ReportError {
    ReportError::Io { path: path.display().to_string(), message: e.to_string() }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| ReportError::Format { path: path.display().to_string(), message: e.to_string() })
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<(), ReportError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| io_err(path, e))?;
    // written by hand so that an empty log still has its header
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub(crate) fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ReportError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| ReportError::Format { path: format!("{} row {}", path.display(), i + 2), message: e.to_string() })
        })
        .collect()
}

const TICK_HEADER: &[&str] = &["time_s", "sensor_id", "value", "transmitted", "stored_as", "stored_value", "battery_joules"];
const COMMAND_HEADER: &[&str] = &[
    "time_s",
    "sensor_id",
    "interval_s",
    "model",
    "model_origin_tick",
    "threshold",
    "substitute",
    "applied",
    "detail",
];
const INTERVAL_HEADER: &[&str] = &["time_s", "sensor_id", "interval_s"];
const FAILURE_HEADER: &[&str] = &["time_s", "sensor_id", "description"];

impl ReportBundle {
    pub fn write(&self, dir: &Path) -> Result<(), ReportError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        write_json(&dir.join("summary.json"), &self.report)?;
        write_json(&dir.join("scenario.json"), &self.scenario)?;
        write_csv(&dir.join("ticks.csv"), &self.logs.ticks, TICK_HEADER)?;
        write_csv(&dir.join("commands.csv"), &self.logs.commands, COMMAND_HEADER)?;
        write_csv(&dir.join("intervals.csv"), &self.logs.intervals, INTERVAL_HEADER)?;
        write_csv(&dir.join("failures.csv"), &self.logs.failures, FAILURE_HEADER)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, ReportError> {
        Ok(Self {
            report: read_json(&dir.join("summary.json"))?,
            scenario: read_json(&dir.join("scenario.json"))?,
            logs: RunLogs {
                ticks: read_csv(&dir.join("ticks.csv"))?,
                commands: read_csv(&dir.join("commands.csv"))?,
                intervals: read_csv(&dir.join("intervals.csv"))?,
                failures: read_csv(&dir.join("failures.csv"))?,
            },
        })
    }

    pub fn recompute(&self) -> SimReport {
        summarize(&self.scenario, &self.logs)
    }
}
