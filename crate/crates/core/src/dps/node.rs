use serde::{Deserialize, Serialize};

use super::{bound_history, one_step_forecast, within_threshold, DpsConfig, DpsError, ModelUpdateMsg, Phase};
use crate::forecast::{ArimaModel, Series};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeDecision {
    pub transmitted: bool,
    pub value_sent: Option<f64>,
    /// The raw reading.
    pub local_value: f64,
    /// What both sides appended to the shared history.
    pub shared_value: f64,
    pub forecast: Option<f64>,
}

/// Node half of the scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpsNodeState {
    pub model: Option<ArimaModel>,
    pub shared_history: Series,
    pub phase: Phase,
    pub tick: u64,
    pub model_origin: Option<u64>,
}

impl Default for DpsNodeState {
    fn default() -> Self {
        Self::new()
    }
}

impl DpsNodeState {
    pub fn new() -> Self {
        Self {
            model: None,
            shared_history: Series::new(Vec::new()),
            phase: Phase::Initializing,
            tick: 0,
            model_origin: None,
        }
    }

    /// The value the sink will reconstruct for the next tick if the node
    /// stays silent.
    pub fn expected_next(&self, config: &DpsConfig) -> Option<f64> {
        match (&self.phase, &self.model) {
            (Phase::Predicting, Some(model)) => one_step_forecast(model, &self.shared_history, config.fit_window_ticks),
            _ => None,
        }
    }

    pub fn step(&mut self, measurement: f64, config: &DpsConfig) -> Result<NodeDecision, DpsError> {
        if !measurement.is_finite() {
            return Err(DpsError::NonFinite);
        }
        let forecast = self.expected_next(config);
        let suppress = forecast.is_some_and(|f| within_threshold(measurement, f, config.threshold_epsilon));
        let shared_value = match (suppress, forecast) {
            (true, Some(f)) => f,
            _ => measurement,
        };
        self.shared_history.values.push(shared_value);
        bound_history(&mut self.shared_history, config.fit_window_ticks);
        self.tick += 1;
        Ok(NodeDecision {
            transmitted: !suppress,
            value_sent: (!suppress).then_some(measurement),
            local_value: measurement,
            shared_value,
            forecast,
        })
    }

    /// Installs a model from the sink. Invalid models and updates stamped
    /// with a different tick are rejected and the current model is kept.
    pub fn apply_model_update(&mut self, msg: &ModelUpdateMsg) -> Result<(), DpsError> {
        let model = msg.to_model();
        model.validate().map_err(|e| DpsError::RejectedModel(e.to_string()))?;
        if msg.origin_tick != self.tick {
            return Err(DpsError::Desync {
                tick: self.tick,
                reason: format!("model update stamped for tick {}", msg.origin_tick),
            });
        }
        self.model = Some(model);
        self.model_origin = Some(msg.origin_tick);
        self.phase = Phase::Predicting;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::ArimaOrder;

    /// A node that forecasts a flat 20.0 from here on.
    fn predicting_node() -> DpsNodeState {
        let mut node = DpsNodeState::new();
        let config = DpsConfig::default();
        for _ in 0..3 {
            node.step(20.0, &config).unwrap();
        }
        let msg = ModelUpdateMsg {
            order: ArimaOrder::new(0, 1, 0),
            ar_coeffs: vec![],
            ma_coeffs: vec![],
            intercept: 0.0,
            noise_variance: 0.0,
            origin_tick: 3,
        };
        node.apply_model_update(&msg).unwrap();
        node
    }

    #[test]
    fn initializing_always_transmits() {
        let mut node = DpsNodeState::new();
        let d = node.step(5.0, &DpsConfig::default()).unwrap();
        assert!(d.transmitted);
        assert_eq!(d.value_sent, Some(5.0));
        assert_eq!(node.tick, 1);
    }

    #[test]
    fn within_threshold_is_suppressed() {
        let mut node = predicting_node();
        let config = DpsConfig { threshold_epsilon: 0.5, ..DpsConfig::default() };
        let d = node.step(20.3, &config).unwrap();
        assert!(!d.transmitted);
        assert_eq!(d.value_sent, None);
        assert_eq!(node.shared_history.values.last(), Some(&20.0));
    }

    #[test]
    fn beyond_threshold_is_transmitted() {
        let mut node = predicting_node();
        let config = DpsConfig { threshold_epsilon: 0.5, ..DpsConfig::default() };
        let d = node.step(21.0, &config).unwrap();
        assert!(d.transmitted);
        assert_eq!(d.value_sent, Some(21.0));
        assert_eq!(node.shared_history.values.last(), Some(&21.0));
    }

    #[test]
    fn infinite_threshold_never_transmits() {
        let mut node = predicting_node();
        let config = DpsConfig { threshold_epsilon: f64::INFINITY, ..DpsConfig::default() };
        let sent = (0..100).filter(|i| node.step(20.0 + (*i as f64).sin() * 50.0, &config).unwrap().transmitted).count();
        assert_eq!(sent, 0);
    }

    #[test]
    fn update_is_idempotent_and_checked() {
        let mut node = predicting_node();
        let msg = ModelUpdateMsg::from_model(node.model.as_ref().unwrap(), node.tick);
        let before = node.clone();
        node.apply_model_update(&msg).unwrap();
        assert_eq!(node, before);

        let stale = ModelUpdateMsg { origin_tick: 1, ..msg.clone() };
        assert!(matches!(node.apply_model_update(&stale), Err(DpsError::Desync { .. })));
        let explosive = ModelUpdateMsg { order: ArimaOrder::new(1, 0, 0), ar_coeffs: vec![1.5], ..msg };
        assert!(matches!(node.apply_model_update(&explosive), Err(DpsError::RejectedModel(_))));
        assert_eq!(node, before);
    }

    #[test]
    fn nan_rejected() {
        let mut node = DpsNodeState::new();
        assert_eq!(node.step(f64::NAN, &DpsConfig::default()), Err(DpsError::NonFinite));
        assert_eq!(node.tick, 0);
    }
}
