//! Offline DPS replay: node and sink in lockstep over a recorded trace, no
//! dashboard involved.

use std::path::Path;

use sensorloop_core::dps::{run_lockstep, DpsConfig, DpsError, Phase, TickRecord};
use serde::{Deserialize, Serialize};

use crate::report::{read_csv, read_json, write_csv, write_json, ReportError};
use crate::signal::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub samples: u64,
    pub transmissions: u64,
    pub suppressions: u64,
    pub suppression_ratio: f64,
    /// Counted over ticks where the node already had a model.
    pub predicting_ticks: u64,
    pub suppression_ratio_after_init: f64,
    pub max_reconstruction_error: f64,
    pub model_updates: u64,
    pub threshold_epsilon: f64,
}

/// One `ticks.csv` row of a replay bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRow {
    pub tick: u64,
    pub phase: Phase,
    pub measurement: f64,
    pub forecast: Option<f64>,
    pub transmitted: bool,
    pub reconstructed: f64,
    pub model_update: bool,
}

impl From<&TickRecord> for ReplayRow {
    fn from(r: &TickRecord) -> Self {
        Self {
            tick: r.tick,
            phase: r.phase,
            measurement: r.measurement,
            forecast: r.forecast,
            transmitted: r.transmitted,
            reconstructed: r.reconstructed,
            model_update: r.model_update,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBundle {
    pub summary: ReplaySummary,
    pub config: DpsConfig,
    pub rows: Vec<ReplayRow>,
}

fn ratio(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

/// Summary statistics from the per-tick rows.
pub fn summarize_replay(rows: &[ReplayRow], threshold_epsilon: f64) -> ReplaySummary {
    let samples = rows.len() as u64;
    let transmissions = rows.iter().filter(|r| r.transmitted).count() as u64;
    let predicting: Vec<&ReplayRow> = rows.iter().filter(|r| r.phase == Phase::Predicting).collect();
    let suppressed_predicting = predicting.iter().filter(|r| !r.transmitted).count() as u64;
    ReplaySummary {
        samples,
        transmissions,
        suppressions: samples - transmissions,
        suppression_ratio: ratio(samples - transmissions, samples),
        predicting_ticks: predicting.len() as u64,
        suppression_ratio_after_init: ratio(suppressed_predicting, predicting.len() as u64),
        max_reconstruction_error: rows.iter().map(|r| (r.measurement - r.reconstructed).abs()).fold(0.0, f64::max),
        model_updates: rows.iter().filter(|r| r.model_update).count() as u64,
        threshold_epsilon,
    }
}

pub fn replay(trace: &Trace, config: &DpsConfig) -> Result<ReplayBundle, DpsError> {
    let run = run_lockstep(&trace.values, config)?;
    let rows: Vec<ReplayRow> = run.records.iter().map(ReplayRow::from).collect();
    Ok(ReplayBundle { summary: summarize_replay(&rows, config.threshold_epsilon), config: config.clone(), rows })
}

const HEADER: &[&str] = &["tick", "phase", "measurement", "forecast", "transmitted", "reconstructed", "model_update"];

impl ReplayBundle {
    pub fn write(&self, dir: &Path) -> Result<(), ReportError> {
        std::fs::create_dir_all(dir).map_err(|e| crate::report::io_err(dir, e))?;
        write_json(&dir.join("summary.json"), &self.summary)?;
        write_json(&dir.join("dps.json"), &self.config)?;
        write_csv(&dir.join("ticks.csv"), &self.rows, HEADER)
    }

    pub fn read(dir: &Path) -> Result<Self, ReportError> {
        Ok(Self {
            summary: read_json(&dir.join("summary.json"))?,
            config: read_json(&dir.join("dps.json"))?,
            rows: read_csv(&dir.join("ticks.csv"))?,
        })
    }

    pub fn recompute(&self) -> ReplaySummary {
        summarize_replay(&self.rows, self.config.threshold_epsilon)
    }
}
