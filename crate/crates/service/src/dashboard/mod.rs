//! The dashboard: collects measurements, stores them, publishes events and
//! sends reconfiguration commands back toward the gateways.
//!
//! Per-sensor state (DPS sink, schedule and weather rules, pending
//! commands) lives in one actor per sensor behind its own mutex. Requests
//! for different sensors never contend; requests for one sensor are
//! processed in arrival order.
//!
//! Commands reach gateways in two ways. Every acknowledgement of a
//! measurement or slot carries the commands addressed to that sensor,
//! which is how rule decisions and DPS model refreshes reach a node
//! between two of its samples. `GET /gateways/{id}/commands` hands out the
//! rest, except model and threshold changes for DPS sensors: those must
//! land between the same two samples on both sides and so only travel with
//! an acknowledgement.

mod failures;
mod sensor;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};
use sensorloop_core::dps::DpsError;
use sensorloop_core::protocol::*;
use sensorloop_core::rules::{assess_points, decide_reconfiguration, evaluate_schedule, RelevanceVerdict};
use serde::Serialize;
use thiserror::Error;

use self::failures::FailureLog;
use self::sensor::{validate_provision, SensorActor};
use crate::publisher::{PublishError, Publisher, DEFAULT_QUEUE_CAPACITY};
use crate::store::{check_sensor_id, Store, StoreError};
use crate::weather::{WeatherClient, WeatherError, WeatherSource};

#[derive(Debug, Clone)]
pub struct DashboardConfig {
    pub data_dir: PathBuf,
    /// Base URL of the weather service. Weather rules take the eager path
    /// when it is absent.
    pub weather_url: Option<String>,
    pub listener_queue_capacity: usize,
    pub listener_connect_timeout: Duration,
}

impl DashboardConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            weather_url: None,
            listener_queue_capacity: DEFAULT_QUEUE_CAPACITY,
            listener_connect_timeout: Duration::from_secs(2),
        }
    }
}

#[derive(Debug, Error)]
pub enum DashboardError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Unreachable(String),
    #[error("{0}")]
    Internal(String),
}

impl From<StoreError> for DashboardError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Invalid(_) | StoreError::InvalidSensorId(_) | StoreError::InvalidRange { .. } => {
                DashboardError::Invalid(e.to_string())
            }
            StoreError::Duplicate { .. } => DashboardError::Conflict(e.to_string()),
            StoreError::Corrupt { .. } | StoreError::Io(_) => DashboardError::Internal(e.to_string()),
        }
    }
}

impl From<PublishError> for DashboardError {
    fn from(e: PublishError) -> Self {
        match e {
            PublishError::Invalid(_) => DashboardError::Invalid(e.to_string()),
            PublishError::Unreachable { .. } => DashboardError::Unreachable(e.to_string()),
            PublishError::UnknownListener(_) => DashboardError::NotFound(e.to_string()),
        }
    }
}

#[derive(Default)]
struct Counters {
    ingested: AtomicU64,
    sensed: AtomicU64,
    reconstructed: AtomicU64,
    weather: AtomicU64,
    conflicts: AtomicU64,
    commands: AtomicU64,
}

enum Sample {
    Received(Measurement),
    Slot(SlotNotice),
}

impl Sample {
    fn sensor_id(&self) -> &str {
        match self {
            Sample::Received(m) => &m.sensor_id,
            Sample::Slot(s) => &s.sensor_id,
        }
    }

    fn tick(&self) -> i64 {
        match self {
            Sample::Received(m) => m.tick,
            Sample::Slot(s) => s.tick,
        }
    }

    fn wallclock(&self) -> DateTime<Utc> {
        match self {
            Sample::Received(m) => m.wallclock,
            Sample::Slot(s) => s.wallclock,
        }
    }
}

pub struct Dashboard {
    store: Store,
    publisher: Publisher,
    sensors: RwLock<HashMap<String, Arc<Mutex<SensorActor>>>>,
    commands: Mutex<BTreeMap<u64, CommandRecord>>,
    next_command: AtomicU64,
    failures: Mutex<FailureLog>,
    weather: Option<Arc<dyn WeatherSource>>,
    counters: Counters,
}

impl Dashboard {
    pub fn open(config: &DashboardConfig) -> Result<Arc<Self>, DashboardError> {
        let weather = config
            .weather_url
            .as_ref()
            .map(|url| Arc::new(WeatherClient::new(url.clone())) as Arc<dyn WeatherSource>);
        Self::open_with_weather(config, weather)
    }

    /// Like [`Dashboard::open`] with any weather source, e.g. in-process
    /// fixtures.
    pub fn open_with_weather(
        config: &DashboardConfig,
        weather: Option<Arc<dyn WeatherSource>>,
    ) -> Result<Arc<Self>, DashboardError> {
        let internal = |e: std::io::Error| DashboardError::Internal(e.to_string());
        std::fs::create_dir_all(&config.data_dir).map_err(internal)?;
        Ok(Arc::new(Self {
            store: Store::open(&config.data_dir)?,
            publisher: Publisher::new(config.listener_queue_capacity, config.listener_connect_timeout),
            sensors: RwLock::default(),
            commands: Mutex::default(),
            next_command: AtomicU64::new(1),
            failures: Mutex::new(FailureLog::open(&config.data_dir).map_err(internal)?),
            weather,
            counters: Counters::default(),
        }))
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn actor(&self, sensor_id: &str) -> Option<Arc<Mutex<SensorActor>>> {
        self.sensors.read().unwrap().get(sensor_id).cloned()
    }

    fn actor_or_create(&self, sensor_id: &str, unit: &str) -> Arc<Mutex<SensorActor>> {
        if let Some(a) = self.actor(sensor_id) {
            return a;
        }
        let mut sensors = self.sensors.write().unwrap();
        sensors
            .entry(sensor_id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(SensorActor::unprovisioned(sensor_id, unit))))
            .clone()
    }

    fn publish<T: Serialize>(&self, topic: Topic, body: &T) {
        let body = serde_json::to_value(body).expect("event bodies serialize");
        self.publisher.publish(topic, body);
    }

    /// Declares a gateway and the sensors behind it. Re-sending an identical
    /// registration is a no-op; changing a sensor that already has data is
    /// a conflict.
    pub fn register_gateway(&self, reg: &GatewayRegistration) -> Result<usize, DashboardError> {
        check_sensor_id(&reg.gateway_id).map_err(|e| DashboardError::Invalid(format!("gateway id: {e}")))?;
        for p in &reg.sensors {
            validate_provision(p)?;
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = reg.sensors.iter().find(|p| !seen.insert(&p.sensor_id)) {
            return Err(DashboardError::Invalid(format!("sensor {} listed twice", dup.sensor_id)));
        }
        let mut sensors = self.sensors.write().unwrap();
        for p in &reg.sensors {
            if let Some(existing) = sensors.get(&p.sensor_id) {
                let existing = existing.lock().unwrap();
                let same = existing.provision.as_ref() == Some(p) && existing.gateway_id.as_deref() == Some(&reg.gateway_id);
                if existing.last_tick.is_some() && !same {
                    return Err(DashboardError::Conflict(format!(
                        "sensor {} already has data under another configuration",
                        p.sensor_id
                    )));
                }
            }
        }
        for p in &reg.sensors {
            let keep = sensors.get(&p.sensor_id).is_some_and(|a| {
                let a = a.lock().unwrap();
                a.provision.as_ref() == Some(p) && a.gateway_id.as_deref() == Some(&reg.gateway_id)
            });
            if !keep {
                sensors.insert(p.sensor_id.clone(), Arc::new(Mutex::new(SensorActor::provisioned(&reg.gateway_id, p))));
            }
        }
        tracing::info!(gateway = %reg.gateway_id, sensors = reg.sensors.len(), "gateway registered");
        Ok(reg.sensors.len())
    }

    /// `POST /measurements`
    pub fn ingest(&self, m: Measurement) -> Result<IngestAck, DashboardError> {
        m.validate().map_err(|e| DashboardError::Invalid(e.to_string()))?;
        check_sensor_id(&m.sensor_id)?;
        let actor = self.actor_or_create(&m.sensor_id, &m.unit);
        let mut actor = actor.lock().unwrap();
        self.accept(&mut actor, Sample::Received(m))
    }

    /// `POST /slots`: the DPS sensor sampled but stayed silent; the sink's
    /// forecast is stored in its place.
    pub fn slot(&self, notice: SlotNotice) -> Result<IngestAck, DashboardError> {
        let actor = self
            .actor(&notice.sensor_id)
            .ok_or_else(|| DashboardError::NotFound(format!("unknown sensor {}", notice.sensor_id)))?;
        let mut actor = actor.lock().unwrap();
        if actor.dps.is_none() {
            return Err(DashboardError::Invalid(format!("sensor {} does not use DPS", notice.sensor_id)));
        }
        self.accept(&mut actor, Sample::Slot(notice))
    }

    fn conflict(&self, message: String) -> DashboardError {
        self.counters.conflicts.fetch_add(1, Ordering::Relaxed);
        DashboardError::Conflict(message)
    }

    fn accept(&self, actor: &mut SensorActor, sample: Sample) -> Result<IngestAck, DashboardError> {
        let (sensor_id, tick, wallclock) = (sample.sensor_id().to_string(), sample.tick(), sample.wallclock());
        if self.store.contains(&sensor_id, tick) {
            return Err(self.conflict(format!("sensor {sensor_id} already has a measurement at tick {tick}")));
        }
        if actor.dps.is_some() && actor.last_tick.is_some_and(|last| tick <= last) {
            return Err(self.conflict(format!("sensor {sensor_id}: tick {tick} arrives after tick {:?}", actor.last_tick)));
        }

        // What the sample says, before any substitution.
        let (observed, mut provenance, unit) = match &sample {
            Sample::Received(m) => (m.value, Provenance::Sensed, m.unit.clone()),
            Sample::Slot(_) => (f64::NAN, Provenance::DpsReconstructed, actor.unit.clone()),
        };
        let mut observed = observed;
        if let Some(dps) = actor.dps.as_mut() {
            let received = matches!(sample, Sample::Received(_)).then_some(observed);
            observed = dps.sink.step(received, &dps.config).map_err(|e| match e {
                DpsError::NonFinite => DashboardError::Invalid(e.to_string()),
                _ => self.conflict(format!("sensor {sensor_id}: {e}")),
            })?;
        }

        let mut commands = Vec::new();
        let mut stored_value = observed;
        if actor.substituting() {
            let location = actor.weather.as_ref().map(|w| w.rule.location.clone()).unwrap_or_default();
            match self.weather_source().and_then(|w| w.current(&location, wallclock)) {
                Ok(reading) => {
                    stored_value = reading.temperature;
                    provenance = Provenance::WeatherForecast;
                }
                Err(e) => commands.extend(self.fall_back_to_eager(actor, wallclock, &e)),
            }
        }

        let stored = self.store.append(Measurement {
            sensor_id: sensor_id.clone(),
            tick,
            wallclock,
            value: stored_value,
            unit,
            provenance,
        })?;
        actor.last_tick = Some(tick);
        match &sample {
            Sample::Received(_) => self.counters.ingested.fetch_add(1, Ordering::Relaxed),
            Sample::Slot(_) => 0,
        };
        let counter = match provenance {
            Provenance::Sensed => &self.counters.sensed,
            Provenance::DpsReconstructed => &self.counters.reconstructed,
            Provenance::WeatherForecast => &self.counters.weather,
        };
        counter.fetch_add(1, Ordering::Relaxed);
        self.publish(Topic::Measurement, &stored);

        // Queued operator commands first, then whatever the rules decide now,
        // so both ends apply model changes in the same order.
        let mut delivered = self.deliver_outbox(actor, true);
        delivered.append(&mut commands);
        delivered.extend(self.refresh_dps(actor, wallclock));
        delivered.extend(self.evaluate_schedule_rule(actor, wallclock));
        delivered.extend(self.evaluate_weather_rule(actor, wallclock, observed));

        Ok(IngestAck { seq: stored.seq, stored_as: provenance, value: stored_value, commands: delivered })
    }

    fn weather_source(&self) -> Result<&dyn WeatherSource, WeatherError> {
        self.weather.as_deref().ok_or_else(|| WeatherError::Transport("no weather service configured".into()))
    }

    fn new_command(&self, actor: &mut SensorActor, command: ReconfigCommand) -> DispatchedCommand {
        let command_id = self.next_command.fetch_add(1, Ordering::SeqCst);
        if let Some(interval) = command.set_interval_seconds {
            actor.interval_seconds = Some(interval);
        }
        let record = CommandRecord {
            command_id,
            gateway_id: actor.gateway_id.clone().unwrap_or_default(),
            command: command.clone(),
            status: DeliveryStatus::Queued,
            detail: None,
        };
        self.commands.lock().unwrap().insert(command_id, record.clone());
        self.counters.commands.fetch_add(1, Ordering::Relaxed);
        self.publish(Topic::Reconfiguration, &record);
        DispatchedCommand { command_id, command }
    }

    fn set_status(&self, command_id: u64, status: DeliveryStatus, detail: Option<String>) -> Option<CommandRecord> {
        let record = {
            let mut commands = self.commands.lock().unwrap();
            let record = commands.get_mut(&command_id)?;
            record.status = status;
            record.detail = detail;
            record.clone()
        };
        self.publish(Topic::Reconfiguration, &record);
        Some(record)
    }

    /// Hands out queued operator commands. With `in_step` the sensor has
    /// just advanced one sample, so model and threshold changes can be
    /// mirrored on the sink; otherwise those stay queued.
    fn deliver_outbox(&self, actor: &mut SensorActor, in_step: bool) -> Vec<DispatchedCommand> {
        let mut out = Vec::new();
        let mut keep = std::collections::VecDeque::new();
        while let Some(id) = actor.outbox.pop_front() {
            let Some(record) = self.commands.lock().unwrap().get(&id).cloned() else { continue };
            let mut command = record.command;
            let syncs_sink = command.model_update.is_some() || command.threshold_epsilon.is_some();
            match actor.dps.as_mut() {
                Some(_) if syncs_sink && !in_step => {
                    keep.push_back(id);
                    continue;
                }
                Some(dps) if syncs_sink => {
                    if let Some(msg) = command.model_update.as_mut() {
                        // Operator models are stamped for the tick they land on.
                        msg.origin_tick = dps.sink.tick;
                        if let Err(e) = dps.sink.adopt_model(msg) {
                            self.set_status(id, DeliveryStatus::Failed, Some(e.to_string()));
                            continue;
                        }
                        self.commands.lock().unwrap().entry(id).and_modify(|r| r.command = command.clone());
                    }
                    if let Some(eps) = command.threshold_epsilon {
                        dps.config.threshold_epsilon = eps;
                    }
                }
                _ => {}
            }
            out.push(DispatchedCommand { command_id: id, command });
        }
        actor.outbox = keep;
        out
    }

    fn refresh_dps(&self, actor: &mut SensorActor, wallclock: DateTime<Utc>) -> Option<DispatchedCommand> {
        let dps = actor.dps.as_mut()?;
        let msg = dps.sink.maybe_refresh_model(&dps.config)?;
        let command = ReconfigCommand::new(actor.sensor_id.clone()).with_model(msg.clone());
        self.publish(
            Topic::Analysis,
            &RuleDecision {
                sensor_id: actor.sensor_id.clone(),
                wallclock,
                rule: RuleKind::DpsRefresh,
                verdict: None,
                command: Some(command.clone()),
                note: Some(format!("ARIMA{} fitted at tick {}", msg.order, msg.origin_tick)),
            },
        );
        Some(self.new_command(actor, command))
    }

    fn evaluate_schedule_rule(&self, actor: &mut SensorActor, wallclock: DateTime<Utc>) -> Option<DispatchedCommand> {
        let state = actor.schedule.as_mut()?;
        let now = wallclock.timestamp();
        if state.next_evaluation.is_some_and(|due| now < due) {
            return None;
        }
        let period = state.rule.evaluation_period_seconds as i64;
        state.next_evaluation = Some((now.div_euclid(period) + 1) * period);
        let interval = evaluate_schedule(&state.rule, wallclock);
        let command = (actor.interval_seconds != Some(interval))
            .then(|| ReconfigCommand::new(actor.sensor_id.clone()).with_interval(interval));
        self.publish(
            Topic::Analysis,
            &RuleDecision {
                sensor_id: actor.sensor_id.clone(),
                wallclock,
                rule: RuleKind::Schedule,
                verdict: None,
                command: command.clone(),
                note: Some(format!("interval {interval} s")),
            },
        );
        command.map(|c| self.new_command(actor, c))
    }

    fn evaluate_weather_rule(
        &self,
        actor: &mut SensorActor,
        wallclock: DateTime<Utc>,
        observed: f64,
    ) -> Option<DispatchedCommand> {
        let state = actor.weather.as_mut()?;
        state.window.push((wallclock.timestamp(), observed));
        if state.window.len() < state.rule.policy.comparison_window_ticks {
            return None;
        }
        let window = std::mem::take(&mut state.window);
        let location = state.rule.location.clone();

        let first = window[0].0.div_euclid(3600) * 3600;
        let last = window[window.len() - 1].0;
        let hours = ((last - first).div_euclid(3600) + 2) as u32;
        let from = Utc.timestamp_opt(first, 0).single().expect("in range");
        let reference = match self.weather_source().and_then(|w| w.forecast(&location, from, hours)) {
            Ok(series) => series,
            Err(e) => return self.fall_back_to_eager(actor, wallclock, &e),
        };
        let points: Vec<(i64, f64)> = reference.values.iter().map(|p| (p.timestamp.timestamp(), p.temperature)).collect();
        let policy = state.rule.policy.clone();
        let verdict = match assess_points(&window, &points, 3600, &policy) {
            Ok(v) => v,
            Err(e) => {
                self.publish_weather(actor, wallclock, None, None, Some(format!("not compared: {e}")));
                return None;
            }
        };
        let decision = state.hysteresis.observe(verdict.agrees);
        let command = decision.map(|agrees| {
            state.substituting = agrees;
            decide_reconfiguration(&verdict, &policy, &actor.sensor_id)
        });
        self.publish_weather(actor, wallclock, Some(verdict), command.clone(), None);
        command.map(|c| self.new_command(actor, c))
    }

    fn publish_weather(
        &self,
        actor: &SensorActor,
        wallclock: DateTime<Utc>,
        verdict: Option<RelevanceVerdict>,
        command: Option<ReconfigCommand>,
        note: Option<String>,
    ) {
        self.publish(
            Topic::Analysis,
            &RuleDecision { sensor_id: actor.sensor_id.clone(), wallclock, rule: RuleKind::Weather, verdict, command, note },
        );
    }

    /// Without a usable reference the node has to measure for itself.
    fn fall_back_to_eager(
        &self,
        actor: &mut SensorActor,
        wallclock: DateTime<Utc>,
        error: &WeatherError,
    ) -> Option<DispatchedCommand> {
        tracing::warn!(sensor = %actor.sensor_id, %error, "weather reference unavailable, sampling eagerly");
        let state = actor.weather.as_mut()?;
        state.window.clear();
        let already = state.hysteresis.committed() == Some(false);
        state.hysteresis.force(false);
        state.substituting = false;
        let command = (!already).then(|| {
            ReconfigCommand::new(actor.sensor_id.clone())
                .with_interval(state.rule.policy.eager_interval_seconds)
                .with_substitute(SubstituteSource::None)
        });
        self.publish_weather(actor, wallclock, None, command.clone(), Some(error.to_string()));
        command.map(|c| self.new_command(actor, c))
    }

    /// `GET /series`
    pub fn query_series(&self, sensor_id: &str, from: i64, to: i64) -> Result<SeriesResponse, DashboardError> {
        let points = self.store.query(sensor_id, from, to)?;
        Ok(SeriesResponse { sensor_id: sensor_id.to_string(), from, to, points })
    }

    /// `POST /listeners`
    pub fn register_listener(&self, sub: &Subscription) -> Result<SubscriptionAck, DashboardError> {
        Ok(SubscriptionAck { subscription_id: self.publisher.register(sub)? })
    }

    pub fn deregister_listener(&self, subscription_id: u64) -> Result<(), DashboardError> {
        Ok(self.publisher.deregister(subscription_id)?)
    }

    /// Blocks until listener queues are flushed. False on timeout.
    pub fn wait_for_listeners(&self, timeout: Duration) -> bool {
        self.publisher.wait_idle(timeout)
    }

    /// `POST /reconfig`: queues an operator command for the owning gateway.
    pub fn dispatch_reconfig(&self, command: ReconfigCommand) -> Result<DeliveryReport, DashboardError> {
        command.validate().map_err(|e| DashboardError::Invalid(e.to_string()))?;
        let target = &command.target_sensor_id;
        let not_found = || DashboardError::NotFound(format!("no gateway owns sensor {target}"));
        let actor = self.actor(target).ok_or_else(not_found)?;
        let mut actor = actor.lock().unwrap();
        if actor.gateway_id.is_none() {
            return Err(not_found());
        }
        if actor.dps.is_none() && (command.model_update.is_some() || command.threshold_epsilon.is_some()) {
            return Err(DashboardError::Invalid(format!("sensor {target} does not use DPS")));
        }
        if let Some(source) = command.substitute_source {
            match actor.weather.as_mut() {
                Some(w) => {
                    w.substituting = source == SubstituteSource::WeatherForecast;
                    w.hysteresis.force(w.substituting);
                }
                None if source == SubstituteSource::WeatherForecast => {
                    return Err(DashboardError::Invalid(format!("sensor {target} has no weather rule")));
                }
                None => {}
            }
        }
        let dispatched = self.new_command(&mut actor, command);
        actor.outbox.push_back(dispatched.command_id);
        self.command_report(dispatched.command_id)
    }

    pub fn command_report(&self, command_id: u64) -> Result<DeliveryReport, DashboardError> {
        self.commands
            .lock()
            .unwrap()
            .get(&command_id)
            .map(CommandRecord::report)
            .ok_or_else(|| DashboardError::NotFound(format!("no command {command_id}")))
    }

    /// `POST /reconfig/{id}/ack`
    pub fn acknowledge(&self, command_id: u64, ack: &CommandAck) -> Result<DeliveryReport, DashboardError> {
        let status = if ack.applied { DeliveryStatus::Applied } else { DeliveryStatus::Failed };
        let current = self.command_report(command_id)?;
        match current.status {
            DeliveryStatus::Queued => {}
            s if s == status => return Ok(current),
            s => return Err(DashboardError::Conflict(format!("command {command_id} already {s:?}"))),
        }
        let record = self.set_status(command_id, status, ack.detail.clone()).expect("checked above");
        Ok(record.report())
    }

    /// `GET /gateways/{id}/commands`
    pub fn poll_commands(&self, gateway_id: &str) -> Result<Vec<DispatchedCommand>, DashboardError> {
        let actors: Vec<_> = {
            let sensors = self.sensors.read().unwrap();
            let mut owned: Vec<_> = sensors
                .iter()
                .filter(|(_, a)| a.lock().unwrap().gateway_id.as_deref() == Some(gateway_id))
                .map(|(id, a)| (id.clone(), a.clone()))
                .collect();
            owned.sort_by(|a, b| a.0.cmp(&b.0));
            owned
        };
        if actors.is_empty() {
            return Err(DashboardError::NotFound(format!("unknown gateway {gateway_id}")));
        }
        let mut out = Vec::new();
        for (_, actor) in actors {
            out.extend(self.deliver_outbox(&mut actor.lock().unwrap(), false));
        }
        out.sort_by_key(|c| c.command_id);
        Ok(out)
    }

    /// `POST /failures`
    pub fn report_failure(&self, report: &FailureReport) -> Result<FailureRecord, DashboardError> {
        if report.sensor_id.is_empty() {
            return Err(DashboardError::Invalid("sensor_id is empty".into()));
        }
        let record = {
            let mut log = self.failures.lock().unwrap();
            let record = FailureRecord {
                seq: log.next_seq(),
                sensor_id: report.sensor_id.clone(),
                description: report.description.clone(),
                recorded_at: report.wallclock.unwrap_or_else(Utc::now),
            };
            log.append(record.clone()).map_err(|e| DashboardError::Internal(e.to_string()))?;
            record
        };
        tracing::warn!(sensor = %record.sensor_id, description = %record.description, "failure reported");
        self.publish(Topic::Failure, &record);
        Ok(record)
    }

    /// `GET /failures`, oldest first.
    pub fn failures(&self, sensor_id: Option<&str>) -> Vec<FailureRecord> {
        let log = self.failures.lock().unwrap();
        log.records().iter().filter(|r| sensor_id.map_or(true, |s| r.sensor_id == s)).cloned().collect()
    }

    /// `GET /sensors/{id}`
    pub fn sensor_status(&self, sensor_id: &str) -> Result<SensorStatus, DashboardError> {
        let stored = self.store.len(sensor_id);
        let Some(actor) = self.actor(sensor_id) else {
            if stored == 0 {
                return Err(DashboardError::NotFound(format!("unknown sensor {sensor_id}")));
            }
            let last_tick = self.store.query(sensor_id, i64::MIN, i64::MAX)?.last().map(|m| m.measurement.tick);
            return Ok(SensorStatus {
                sensor_id: sensor_id.into(),
                gateway_id: None,
                interval_seconds: None,
                substituting: false,
                stored,
                last_tick,
                dps: None,
            });
        };
        let actor = actor.lock().unwrap();
        Ok(SensorStatus {
            sensor_id: sensor_id.into(),
            gateway_id: actor.gateway_id.clone(),
            interval_seconds: actor.interval_seconds,
            substituting: actor.substituting(),
            stored,
            last_tick: actor.last_tick,
            dps: actor.dps_status(),
        })
    }

    /// `GET /metrics`
    pub fn metrics(&self) -> Metrics {
        let c = &self.counters;
        let p = self.publisher.counters();
        let load = |a: &AtomicU64| a.load(Ordering::Relaxed);
        Metrics {
            ingested: load(&c.ingested),
            sensed_stored: load(&c.sensed),
            reconstructed_stored: load(&c.reconstructed),
            weather_stored: load(&c.weather),
            conflicts: load(&c.conflicts),
            events_published: load(&p.published),
            events_delivered: load(&p.delivered),
            events_dropped: load(&p.dropped),
            listeners: self.publisher.listener_count() as u64,
            commands_dispatched: load(&c.commands),
            failures: self.failures.lock().unwrap().records().len() as u64,
        }
    }
}
