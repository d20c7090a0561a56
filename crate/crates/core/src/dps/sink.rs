use serde::{Deserialize, Serialize};

use super::{bound_history, one_step_forecast, within_threshold, DpsConfig, DpsError, ModelUpdateMsg, Phase};
use crate::forecast::{select_model, ArimaModel, Series};

/// Sink half of the scheme: rebuilds the node's series and schedules model
/// refreshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpsSinkState {
    pub model: Option<ArimaModel>,
    pub reconstruction: Series,
    pub phase: Phase,
    pub tick: u64,
    pub pending_refresh_at: u64,
    pub consecutive_tx: u32,
    pub model_origin: Option<u64>,
}

impl DpsSinkState {
    pub fn new(config: &DpsConfig) -> Self {
        Self {
            model: None,
            reconstruction: Series::new(Vec::new()),
            phase: Phase::Initializing,
            tick: 0,
            pending_refresh_at: config.init_phase_ticks,
            consecutive_tx: 0,
            model_origin: None,
        }
    }

    /// What the sink reconstructs for the next tick if nothing arrives.
    pub fn expected_next(&self, config: &DpsConfig) -> Option<f64> {
        match (&self.phase, &self.model) {
            (Phase::Predicting, Some(model)) => one_step_forecast(model, &self.reconstruction, config.fit_window_ticks),
            _ => None,
        }
    }

    /// Advances one tick. `received` is the transmitted reading, if any.
    /// Returns the reconstructed value for the tick. On error the state is
    /// left untouched.
    pub fn step(&mut self, received: Option<f64>, config: &DpsConfig) -> Result<f64, DpsError> {
        let next_tick = self.tick + 1;
        let desync = |reason: String| Err(DpsError::Desync { tick: next_tick, reason });
        let expected = self.expected_next(config);
        let value = match (received, expected) {
            (Some(v), _) if !v.is_finite() => return Err(DpsError::NonFinite),
            (None, None) => return desync("no transmission while the node must transmit".into()),
            (Some(v), Some(f)) if within_threshold(v, f, config.threshold_epsilon) => {
                return desync(format!("received {v} although forecast {f} is within threshold"));
            }
            (Some(v), _) => v,
            (None, Some(f)) => f,
        };

        if self.phase == Phase::Predicting {
            self.consecutive_tx = if received.is_some() { self.consecutive_tx + 1 } else { 0 };
        }
        self.reconstruction.values.push(value);
        bound_history(&mut self.reconstruction, config.fit_window_ticks);
        self.tick = next_tick;
        Ok(value)
    }

    fn refresh_due(&self, config: &DpsConfig) -> bool {
        let scheduled = self.tick == self.pending_refresh_at;
        let error_triggered = self.phase == Phase::Predicting
            && config.error_refresh_after.is_some_and(|k| k > 0 && self.consecutive_tx >= k);
        scheduled || error_triggered
    }

    /// Fits and returns a new model when one is due: at the end of the
    /// initialization phase and every `refresh_interval_ticks` after it.
    /// A failed fit keeps the current model and emits nothing.
    pub fn maybe_refresh_model(&mut self, config: &DpsConfig) -> Option<ModelUpdateMsg> {
        if !self.refresh_due(config) {
            return None;
        }
        if self.tick >= self.pending_refresh_at {
            self.pending_refresh_at = self.tick + config.refresh_interval_ticks;
        }
        self.consecutive_tx = 0;

        let window = self.reconstruction.tail(config.fit_window_ticks);
        match select_model(&window, &config.forecast_order_grid, config.criterion, &config.fit) {
            Ok(model) => {
                let msg = ModelUpdateMsg::from_model(&model, self.tick);
                self.install(&msg);
                Some(msg)
            }
            Err(err) => {
                tracing::warn!(tick = self.tick, %err, "model refresh failed, keeping the current model");
                None
            }
        }
    }

    /// Adopts a model injected from outside the refresh schedule, e.g. an
    /// operator command. Same checks as the node side.
    pub fn adopt_model(&mut self, msg: &ModelUpdateMsg) -> Result<(), DpsError> {
        msg.to_model().validate().map_err(|e| DpsError::RejectedModel(e.to_string()))?;
        if msg.origin_tick != self.tick {
            return Err(DpsError::Desync {
                tick: self.tick,
                reason: format!("model update stamped for tick {}", msg.origin_tick),
            });
        }
        self.install(msg);
        Ok(())
    }

    fn install(&mut self, msg: &ModelUpdateMsg) {
        self.model = Some(msg.to_model());
        self.model_origin = Some(msg.origin_tick);
        self.phase = Phase::Predicting;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::ArimaOrder;

    fn flat_model(origin: u64) -> ModelUpdateMsg {
        ModelUpdateMsg {
            order: ArimaOrder::new(0, 1, 0),
            ar_coeffs: vec![],
            ma_coeffs: vec![],
            intercept: 0.0,
            noise_variance: 0.0,
            origin_tick: origin,
        }
    }

    fn predicting_sink(config: &DpsConfig) -> DpsSinkState {
        let mut sink = DpsSinkState::new(config);
        for _ in 0..3 {
            sink.step(Some(20.0), config).unwrap();
        }
        sink.adopt_model(&flat_model(3)).unwrap();
        sink
    }

    #[test]
    fn silent_tick_takes_the_forecast() {
        let config = DpsConfig::default();
        let mut sink = predicting_sink(&config);
        assert_eq!(sink.step(None, &config).unwrap(), 20.0);
        assert_eq!(sink.reconstruction.values.last(), Some(&20.0));
    }

    #[test]
    fn transmitted_value_is_authoritative() {
        let config = DpsConfig::default();
        let mut sink = predicting_sink(&config);
        assert_eq!(sink.step(Some(21.0), &config).unwrap(), 21.0);
        assert_eq!(sink.tick, 4);
    }

    #[test]
    fn desync_is_reported_and_state_kept() {
        let config = DpsConfig::default();
        let mut sink = DpsSinkState::new(&config);
        assert!(matches!(sink.step(None, &config), Err(DpsError::Desync { tick: 1, .. })));
        assert_eq!(sink.tick, 0);

        let mut sink = predicting_sink(&config);
        let before = sink.clone();
        assert!(matches!(sink.step(Some(20.2), &config), Err(DpsError::Desync { .. })));
        assert_eq!(sink, before);
    }

    #[test]
    fn refresh_schedule() {
        let config = DpsConfig { init_phase_ticks: 60, refresh_interval_ticks: 120, ..DpsConfig::default() };
        let mut sink = DpsSinkState::new(&config);
        let mut emitted_at = Vec::new();
        for t in 1..=300u64 {
            let received = match sink.expected_next(&config) {
                Some(f) if (t % 7) != 0 => {
                    let v = (t as f64 * 0.05).sin() * 3.0 + 15.0;
                    if within_threshold(v, f, config.threshold_epsilon) {
                        None
                    } else {
                        Some(v)
                    }
                }
                Some(f) => Some(f + 10.0),
                None => Some((t as f64 * 0.05).sin() * 3.0 + 15.0),
            };
            sink.step(received, &config).unwrap();
            if sink.maybe_refresh_model(&config).is_some() {
                emitted_at.push(t);
            }
        }
        assert_eq!(emitted_at, vec![60, 180, 300]);
    }

    #[test]
    fn constant_window_model_forecasts_the_constant() {
        let config = DpsConfig::default();
        let mut sink = DpsSinkState::new(&config);
        for _ in 0..60 {
            sink.step(Some(12.5), &config).unwrap();
        }
        let msg = sink.maybe_refresh_model(&config).expect("due at the end of init");
        assert_eq!(msg.origin_tick, 60);
        let f = crate::forecast::forecast(&msg.to_model(), &sink.reconstruction, 20).unwrap();
        assert_eq!(f.point_values, vec![12.5; 20]);
    }

    #[test]
    fn error_triggered_refresh_is_opt_in() {
        let base = DpsConfig::default();
        let mut sink = DpsSinkState::new(&base);
        for i in 0..60 {
            sink.step(Some(i as f64 * 0.1), &base).unwrap();
        }
        sink.maybe_refresh_model(&base).unwrap();
        // a run of transmissions far from every forecast
        for k in 0..5 {
            let f = sink.expected_next(&base).unwrap();
            sink.step(Some(f + 100.0 + k as f64), &base).unwrap();
            assert!(sink.maybe_refresh_model(&base).is_none());
        }
        let eager = DpsConfig { error_refresh_after: Some(3), ..base.clone() };
        assert_eq!(sink.consecutive_tx, 5);
        assert!(sink.maybe_refresh_model(&eager).is_some());
        assert_eq!(sink.consecutive_tx, 0);
    }
}
