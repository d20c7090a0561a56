use serde::{Deserialize, Serialize};

use super::{DpsConfig, DpsError, DpsNodeState, DpsSinkState, Phase};

/// One tick of a lockstep run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub phase: Phase,
    pub measurement: f64,
    pub forecast: Option<f64>,
    pub transmitted: bool,
    pub reconstructed: f64,
    pub model_update: bool,
}

#[derive(Debug, Clone)]
pub struct LockstepRun {
    pub records: Vec<TickRecord>,
    pub node: DpsNodeState,
    pub sink: DpsSinkState,
}

/// Drives a node and a sink over `values` with a perfect channel between
/// them, delivering each model update before the next reading.
///
/// Fails on the first tick where the two histories differ.
pub fn run_lockstep(values: &[f64], config: &DpsConfig) -> Result<LockstepRun, DpsError> {
    config.validate()?;
    let mut node = DpsNodeState::new();
    let mut sink = DpsSinkState::new(config);
    let mut records = Vec::with_capacity(values.len());
    for &measurement in values {
        let phase = node.phase;
        let decision = node.step(measurement, config)?;
        let reconstructed = sink.step(decision.value_sent, config)?;
        if reconstructed.to_bits() != decision.shared_value.to_bits() {
            return Err(DpsError::Desync {
                tick: sink.tick,
                reason: format!("sink reconstructed {reconstructed}, node holds {}", decision.shared_value),
            });
        }
        let update = sink.maybe_refresh_model(config);
        if let Some(msg) = &update {
            node.apply_model_update(msg)?;
        }
        records.push(TickRecord {
            tick: node.tick,
            phase,
            measurement,
            forecast: decision.forecast,
            transmitted: decision.transmitted,
            reconstructed,
            model_update: update.is_some(),
        });
    }
    Ok(LockstepRun { records, node, sink })
}
