use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use sensorloop_core::dps::{DpsConfig, DpsError, DpsNodeState};
use sensorloop_core::protocol::{
    CommandAck, DispatchedCommand, FailureReport, GatewayRegistration, IngestAck, Measurement, Provenance,
    SlotNotice,
};
use thiserror::Error;

use crate::energy::{apply_energy, EnergyEvent, EnergyModel};
use crate::gateway::{Gateway, GatewayError};
use crate::report::{CommandRow, FailureRow, IntervalRow, NodeReport, ReportBundle, RunLogs, SimReport, TickRow};
use crate::scenario::{NodeConfig, ScenarioConfig, ScenarioError};
use crate::signal::{sample_signal, wallclock, Signal, SignalError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("node {sensor_id}: {source}")]
    Signal { sensor_id: String, source: SignalError },
    #[error("node {sensor_id}: {source}")]
    Dps { sensor_id: String, source: DpsError },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub scenario: ScenarioConfig,
    pub report: SimReport,
    pub logs: RunLogs,
}

impl SimOutput {
    pub fn bundle(&self) -> ReportBundle {
        ReportBundle { report: self.report.clone(), scenario: self.scenario.clone(), logs: self.logs.clone() }
    }
}

struct Node {
    config: NodeConfig,
    signal: Signal,
    energy: EnergyModel,
    interval: u32,
    dps: Option<(DpsNodeState, DpsConfig)>,
    samples: u64,
    transmissions: u64,
    receptions: u64,
    max_error: f64,
    halted_at: Option<u64>,
}

impl Node {
    /// Charges one event; true when it emptied the battery.
    fn charge(&mut self, event: EnergyEvent) -> bool {
        let charged = apply_energy(&self.energy, event);
        self.energy = charged.model;
        charged.depleted
    }

    fn report(&self) -> NodeReport {
        NodeReport {
            sensor_id: self.config.sensor_id.clone(),
            samples_taken: self.samples,
            transmissions: self.transmissions,
            suppressions: self.samples - self.transmissions,
            receptions: self.receptions,
            energy_spent_joules: self.config.energy.spent(self.samples, self.transmissions, self.receptions),
            max_reconstruction_error: self.max_error,
            halted_at_s: self.halted_at,
        }
    }
}

/// Runs `scenario` against the dashboard at `dashboard_url`.
///
/// Nodes sample at their own intervals on one simulated clock (one tick
/// per second). Samples due at the same second are taken in scenario
/// order, and every request is answered before the next one is sent, so a
/// fresh dashboard sees exactly the same traffic on every run.
///
/// A node whose battery runs out finishes the sample in progress, reports
/// the failure and stops.
pub fn run_scenario(scenario: &ScenarioConfig, dashboard_url: &str) -> Result<SimOutput, SimError> {
    scenario.validate()?;
    let started = Instant::now();
    let mut nodes = scenario
        .nodes
        .iter()
        .enumerate()
        .map(|(i, config)| {
            let signal = Signal::prepare(&config.signal, scenario, i)
                .map_err(|source| SimError::Signal { sensor_id: config.sensor_id.clone(), source })?;
            Ok(Node {
                config: config.clone(),
                signal,
                energy: config.energy.clone(),
                interval: config.initial_interval_seconds,
                dps: config.dps_enabled.then(|| (DpsNodeState::new(), scenario.dps.clone())),
                samples: 0,
                transmissions: 0,
                receptions: 0,
                max_error: 0.0,
                halted_at: None,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let gateway = Gateway::new(dashboard_url);
    gateway.register(&GatewayRegistration { gateway_id: scenario.gateway_id.clone(), sensors: scenario.provisions() })?;

    let mut logs = RunLogs::default();
    let mut due = BinaryHeap::new();
    for (i, node) in nodes.iter().enumerate() {
        logs.intervals.push(IntervalRow { time_s: 0, sensor_id: node.config.sensor_id.clone(), interval_s: node.interval });
        due.push(Reverse((0u64, i)));
    }
    while let Some(Reverse((t, i))) = due.pop() {
        if t >= scenario.duration_seconds {
            break;
        }
        let node = &mut nodes[i];
        step(scenario, &gateway, node, t, &mut logs)?;
        if node.halted_at.is_none() {
            due.push(Reverse((t + u64::from(node.interval), i)));
        }
    }

    let mut report = SimReport::new(scenario, nodes.iter().map(Node::report).collect());
    report.runtime = Some(started.elapsed());
    tracing::info!(
        scenario = %scenario.name,
        samples = report.total_samples,
        transmissions = report.total_tx,
        ratio = report.tx_reduction_ratio,
        "scenario finished"
    );
    Ok(SimOutput { scenario: scenario.clone(), report, logs })
}

fn step(scenario: &ScenarioConfig, gateway: &Gateway, node: &mut Node, t: u64, logs: &mut RunLogs) -> Result<(), SimError> {
    let sensor_id = node.config.sensor_id.clone();
    let value = sample_signal(&node.signal, t as i64)
        .map_err(|source| SimError::Signal { sensor_id: sensor_id.clone(), source })?;
    let at = wallclock(scenario.start, t as i64);
    node.samples += 1;
    let mut depleted = node.charge(EnergyEvent::Sample);

    let transmit = match node.dps.as_mut() {
        Some((state, config)) => {
            state.step(value, config).map_err(|source| SimError::Dps { sensor_id: sensor_id.clone(), source })?.transmitted
        }
        None => true,
    };
    let ack: IngestAck = if transmit {
        node.transmissions += 1;
        depleted |= node.charge(EnergyEvent::Tx);
        gateway.forward(&Measurement {
            sensor_id: sensor_id.clone(),
            tick: t as i64,
            wallclock: at,
            value,
            unit: node.config.unit.clone(),
            provenance: Provenance::Sensed,
        })?
    } else {
        gateway.slot(&SlotNotice { sensor_id: sensor_id.clone(), tick: t as i64, wallclock: at })?
    };
    if ack.stored_as != Provenance::WeatherForecast {
        node.max_error = node.max_error.max((value - ack.value).abs());
    }

    for dispatched in &ack.commands {
        node.receptions += 1;
        depleted |= node.charge(EnergyEvent::Rx);
        let row = apply_command(node, dispatched, t, logs);
        gateway.acknowledge(dispatched.command_id, &CommandAck { applied: row.applied, detail: row.detail.clone() })?;
        logs.commands.push(row);
    }

    logs.ticks.push(TickRow {
        time_s: t,
        sensor_id: sensor_id.clone(),
        value,
        transmitted: transmit,
        stored_as: ack.stored_as,
        stored_value: ack.value,
        battery_joules: node.energy.battery_joules,
    });

    if depleted {
        node.halted_at = Some(t);
        let description = "battery depleted".to_string();
        gateway.report_failure(&FailureReport { sensor_id: sensor_id.clone(), description: description.clone(), wallclock: Some(at) })?;
        logs.failures.push(FailureRow { time_s: t, sensor_id, description });
    }
    Ok(())
}

/// Applies whatever parts of the command the node can. The command counts
/// as applied only if every part was.
fn apply_command(node: &mut Node, dispatched: &DispatchedCommand, t: u64, logs: &mut RunLogs) -> CommandRow {
    let command = &dispatched.command;
    let mut problems = Vec::new();
    if let Some(msg) = &command.model_update {
        match node.dps.as_mut() {
            Some((state, _)) => {
                if let Err(e) = state.apply_model_update(msg) {
                    problems.push(e.to_string());
                }
            }
            None => problems.push("node does not run DPS".into()),
        }
    }
    if let Some(eps) = command.threshold_epsilon {
        match node.dps.as_mut() {
            Some((_, config)) if eps.is_finite() && eps >= 0.0 => config.threshold_epsilon = eps,
            Some(_) => problems.push(format!("threshold {eps} rejected")),
            None => problems.push("node does not run DPS".into()),
        }
    }
    if let Some(interval) = command.set_interval_seconds {
        if interval == 0 {
            problems.push("interval must be positive".into());
        } else if interval != node.interval {
            node.interval = interval;
            logs.intervals.push(IntervalRow { time_s: t, sensor_id: node.config.sensor_id.clone(), interval_s: interval });
        }
    }
    // Substitution happens on the dashboard; the node only changes pace.
    let detail = (!problems.is_empty()).then(|| problems.join("; "));
    if let Some(d) = &detail {
        tracing::warn!(sensor = %node.config.sensor_id, command = dispatched.command_id, "command not applied: {d}");
    }
    CommandRow {
        time_s: t,
        sensor_id: node.config.sensor_id.clone(),
        interval_s: command.set_interval_seconds,
        model: command.model_update.as_ref().map(|m| format!("ARIMA{}", m.order)),
        model_origin_tick: command.model_update.as_ref().map(|m| m.origin_tick),
        threshold: command.threshold_epsilon,
        substitute: command.substitute_source,
        applied: problems.is_empty(),
        detail,
    }
}
