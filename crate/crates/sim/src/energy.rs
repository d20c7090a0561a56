use serde::{Deserialize, Serialize};

/// Battery and per-event costs of one node, in joules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyModel {
    pub battery_joules: f64,
    pub cost_sample_joules: f64,
    pub cost_tx_joules: f64,
    pub cost_rx_joules: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self { battery_joules: 100.0, cost_sample_joules: 0.002, cost_tx_joules: 0.05, cost_rx_joules: 0.03 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyEvent {
    Sample,
    Tx,
    Rx,
}

/// Result of charging one event.
#[derive(Debug, Clone, PartialEq)]
pub struct Charged {
    pub model: EnergyModel,
    /// This event emptied the battery.
    pub depleted: bool,
}

impl EnergyModel {
    pub fn cost(&self, event: EnergyEvent) -> f64 {
        match event {
            EnergyEvent::Sample => self.cost_sample_joules,
            EnergyEvent::Tx => self.cost_tx_joules,
            EnergyEvent::Rx => self.cost_rx_joules,
        }
    }

    /// Nominal energy for the given event counts. Events that ran the
    /// battery below zero are still counted at full cost.
    pub fn spent(&self, samples: u64, transmissions: u64, receptions: u64) -> f64 {
        self.cost_sample_joules * samples as f64
            + self.cost_tx_joules * transmissions as f64
            + self.cost_rx_joules * receptions as f64
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.battery_joules.is_finite() && self.battery_joules > 0.0) {
            out.push("battery_joules must be positive".into());
        }
        for (name, v) in [
            ("cost_sample_joules", self.cost_sample_joules),
            ("cost_tx_joules", self.cost_tx_joules),
            ("cost_rx_joules", self.cost_rx_joules),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                out.push(format!("{name} must be finite and >= 0"));
            }
        }
        out
    }
}

/// Charges `event` against the battery, which never goes below zero.
pub fn apply_energy(model: &EnergyModel, event: EnergyEvent) -> Charged {
    let before = model.battery_joules;
    let after = (before - model.cost(event)).max(0.0);
    Charged { model: EnergyModel { battery_joules: after, ..model.clone() }, depleted: before > 0.0 && after == 0.0 }
}
