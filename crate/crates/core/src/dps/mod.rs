//! Dual prediction scheme.
//!
//! The node and the sink run the same forecast on the same history. After
//! an initialization phase in which every reading is transmitted, the node
//! only transmits a reading when it misses the one-step forecast by more
//! than `threshold_epsilon`; otherwise both sides append the forecast. The
//! history both sides forecast from is therefore the sink-visible one,
//! never the node's raw readings, which keeps the two halves identical tick
//! for tick under reliable in-order transport.
//!
//! The sink fits a fresh model when the initialization phase ends and every
//! `refresh_interval_ticks` after that, and ships it to the node as a
//! [`ModelUpdateMsg`] stamped with the tick it was fitted at.

mod lockstep;
mod msg;
mod node;
mod sink;

pub use lockstep::{run_lockstep, LockstepRun, TickRecord};
pub use msg::ModelUpdateMsg;
pub use node::{DpsNodeState, NodeDecision};
pub use sink::DpsSinkState;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forecast::{forecast, min_fit_length, ArimaModel, ArimaOrder, Criterion, FitConfig, Series};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DpsError {
    #[error("protocol desync at tick {tick}: {reason}")]
    Desync { tick: u64, reason: String },
    #[error("measurement must be finite")]
    NonFinite,
    #[error("model update rejected: {0}")]
    RejectedModel(String),
    #[error("invalid DPS configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initializing,
    Predicting,
}

/// Refresh candidates used when a configuration does not list its own.
pub fn default_order_grid() -> Vec<ArimaOrder> {
    vec![
        ArimaOrder::new(1, 0, 0),
        ArimaOrder::new(0, 1, 1),
        ArimaOrder::new(1, 1, 0),
        ArimaOrder::new(1, 1, 1),
        ArimaOrder::new(2, 1, 1),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpsConfig {
    pub threshold_epsilon: f64,
    pub refresh_interval_ticks: u64,
    pub init_phase_ticks: u64,
    pub forecast_order_grid: Vec<ArimaOrder>,
    /// Trailing window, in ticks, used both for refits and for forecasting.
    pub fit_window_ticks: usize,
    /// Refit early after this many consecutive transmissions while
    /// predicting. Off when absent.
    pub error_refresh_after: Option<u32>,
    pub criterion: Criterion,
    pub fit: FitConfig,
}

impl Default for DpsConfig {
    fn default() -> Self {
        Self {
            threshold_epsilon: 0.5,
            refresh_interval_ticks: 120,
            init_phase_ticks: 60,
            forecast_order_grid: default_order_grid(),
            fit_window_ticks: 240,
            error_refresh_after: None,
            criterion: Criterion::Aic,
            fit: FitConfig::default(),
        }
    }
}

impl DpsConfig {
    /// Shortest series any grid candidate can be fitted on.
    pub fn min_fit_length(&self) -> usize {
        self.forecast_order_grid.iter().map(|o| min_fit_length(*o)).max().unwrap_or(0)
    }

    /// A zero threshold is accepted: it transmits every reading that is not
    /// reproduced exactly by the forecast.
    pub fn validate(&self) -> Result<(), DpsError> {
        let bad = |m: String| Err(DpsError::InvalidConfig(m));
        if self.threshold_epsilon.is_nan() || self.threshold_epsilon < 0.0 {
            return bad(format!("threshold_epsilon {} must be >= 0", self.threshold_epsilon));
        }
        if self.refresh_interval_ticks == 0 {
            return bad("refresh_interval_ticks must be positive".into());
        }
        if self.forecast_order_grid.is_empty() {
            return bad("forecast_order_grid is empty".into());
        }
        let needed = self.min_fit_length();
        if (self.init_phase_ticks as usize) < needed {
            return bad(format!("init_phase_ticks {} is below the fitting minimum {needed}", self.init_phase_ticks));
        }
        if self.fit_window_ticks < needed {
            return bad(format!("fit_window_ticks {} is below the fitting minimum {needed}", self.fit_window_ticks));
        }
        for order in &self.forecast_order_grid {
            order.check_cap(self.fit.max_order).map_err(|e| DpsError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }
}

/// Both sides only ever read the trailing fit window, so older history is
/// dropped once it is twice that long.
pub(crate) fn bound_history(history: &mut Series, window: usize) {
    if history.len() > 2 * window.max(1) {
        history.keep_last(window);
    }
}

/// One-step forecast from the trailing `window` values of `history`.
/// `None` when the model cannot produce a finite value; both sides then
/// treat the tick as a mandatory transmission.
pub fn one_step_forecast(model: &ArimaModel, history: &Series, window: usize) -> Option<f64> {
    let recent = history.tail(window);
    forecast(model, &recent, 1)
        .ok()
        .and_then(|f| f.point_values.first().copied())
        .filter(|v| v.is_finite())
}

/// The node-side suppression test. NaN-safe: a non-finite forecast never
/// suppresses.
pub fn within_threshold(measurement: f64, forecast: f64, epsilon: f64) -> bool {
    (measurement - forecast).abs() <= epsilon
}
