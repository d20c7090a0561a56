use std::path::{Path, PathBuf};

use sensorloop_core::dps::{DpsConfig, DpsError};
use sensorloop_service::weather::stub::Fixtures;
use sensorloop_service::{spawn_dashboard, spawn_weather_stub, DashboardConfig, RunningDashboard, ServerHandle};
use sensorloop_sim::report::SimReport;
use sensorloop_sim::{replay as replay_trace, run_scenario, ReplayBundle, ReplaySummary, ReportBundle, ScenarioConfig, SimOutput, Trace};

use crate::config::ServeConfig;
use crate::error::CliError;

/// A dashboard (and weather stub, when the scenario has fixtures) in this
/// process, on ephemeral ports, storing into a temporary directory that is
/// removed on drop.
pub struct EmbeddedStack {
    pub dashboard: RunningDashboard,
    pub weather: Option<ServerHandle>,
    _data: tempfile::TempDir,
}

impl EmbeddedStack {
    pub fn start(scenario: &ScenarioConfig) -> Result<Self, CliError> {
        let data = tempfile::tempdir().map_err(|e| CliError::Io(format!("temporary data directory: {e}")))?;
        let mut config = DashboardConfig::new(data.path());
        let weather = match scenario.fixtures_dir() {
            Some(dir) => {
                let fixtures = Fixtures::load_dir(&dir).map_err(CliError::Validation)?;
                let stub = spawn_weather_stub(fixtures, ephemeral()).map_err(|e| CliError::Transport(e.to_string()))?;
                config.weather_url = Some(stub.url());
                Some(stub)
            }
            None => None,
        };
        let dashboard = spawn_dashboard(&config, ephemeral()).map_err(|e| CliError::Transport(e.to_string()))?;
        Ok(Self { dashboard, weather, _data: data })
    }

    pub fn url(&self) -> String {
        self.dashboard.url()
    }
}

fn ephemeral() -> std::net::SocketAddr {
    "127.0.0.1:0".parse().expect("literal address")
}

/// The services `serve` keeps running.
pub struct Services {
    pub dashboard: RunningDashboard,
    pub weather: Option<ServerHandle>,
}

/// Starts the weather stub (if configured with fixtures) and the dashboard.
/// A taken port is a transport error.
pub fn start_services(config: &ServeConfig) -> Result<Services, CliError> {
    let mut dashboard_config = DashboardConfig::new(&config.dashboard.data_dir);
    dashboard_config.listener_queue_capacity = config.dashboard.listener_queue_capacity;
    let weather = match &config.weather.fixtures_dir {
        Some(dir) => {
            let fixtures = Fixtures::load_dir(dir).map_err(CliError::Validation)?;
            let addr = config.weather_addr();
            let stub = spawn_weather_stub(fixtures, addr)
                .map_err(|e| CliError::Transport(format!("weather stub cannot listen on {addr}: {e}")))?;
            dashboard_config.weather_url = Some(stub.url());
            Some(stub)
        }
        None => {
            dashboard_config.weather_url = config.weather.url.clone();
            None
        }
    };
    let dashboard = spawn_dashboard(&dashboard_config, config.dashboard_addr()).map_err(|e| match e {
        sensorloop_service::DashboardError::Internal(m) => CliError::Transport(m),
        other => CliError::Io(other.to_string()),
    })?;
    Ok(Services { dashboard, weather })
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    pub seed: Option<u64>,
    pub output: PathBuf,
    /// Run against an in-process dashboard instead of `dashboard_url`.
    pub embedded: bool,
    pub dashboard_url: String,
}

/// Runs a scenario and writes its report bundle to `args.output`.
pub fn simulate(args: &SimulateArgs) -> Result<SimOutput, CliError> {
    let mut scenario = ScenarioConfig::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario = scenario.with_seed(seed);
    }
    let out = if args.embedded {
        let stack = EmbeddedStack::start(&scenario)?;
        run_scenario(&scenario, &stack.url())?
    } else {
        run_scenario(&scenario, &args.dashboard_url)?
    };
    out.bundle().write(&args.output)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ReplayArgs {
    pub trace: PathBuf,
    pub time_column: String,
    pub value_column: String,
    /// TOML file with DPS settings; defaults otherwise.
    pub config: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub output: PathBuf,
}

pub fn load_dps_config(path: Option<&Path>, epsilon: Option<f64>) -> Result<DpsConfig, CliError> {
    let mut config = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None => DpsConfig::default(),
    };
    if let Some(eps) = epsilon {
        config.threshold_epsilon = eps;
    }
    config.validate().map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(config)
}

/// Node and sink in lockstep over a trace file, without any service.
pub fn replay(args: &ReplayArgs) -> Result<ReplayBundle, CliError> {
    let config = load_dps_config(args.config.as_deref(), args.epsilon)?;
    let trace = Trace::load(&args.trace, &args.time_column, &args.value_column)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.trace.display())))?;
    let bundle = replay_trace(&trace, &config).map_err(|e| match e {
        DpsError::InvalidConfig(_) | DpsError::NonFinite => CliError::Validation(e.to_string()),
        _ => CliError::Fit(e.to_string()),
    })?;
    bundle.write(&args.output)?;
    Ok(bundle)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Audited {
    Simulation(SimReport),
    Replay(ReplaySummary),
}

/// Recomputes a bundle's summary from its logs and checks it against the
/// stored one. Simulation bundles are told apart by their `scenario.json`.
pub fn report(dir: &Path) -> Result<Audited, CliError> {
    if dir.join("scenario.json").is_file() {
        let bundle = ReportBundle::read(dir)?;
        let recomputed = bundle.recompute();
        if recomputed != bundle.report {
            return Err(mismatch(dir, &bundle.report, &recomputed));
        }
        Ok(Audited::Simulation(recomputed))
    } else if dir.join("dps.json").is_file() {
        let bundle = ReplayBundle::read(dir)?;
        let recomputed = bundle.recompute();
        if recomputed != bundle.summary {
            return Err(mismatch(dir, &bundle.summary, &recomputed));
        }
        Ok(Audited::Replay(recomputed))
    } else {
        Err(CliError::Validation(format!("{} is not a report bundle", dir.display())))
    }
}

fn mismatch<T: serde::Serialize>(dir: &Path, stored: &T, recomputed: &T) -> CliError {
    let show = |v: &T| serde_json::to_string(v).unwrap_or_default();
    CliError::Mismatch(format!(
        "{}: summary.json does not match its logs\n  stored:     {}\n  recomputed: {}",
        dir.display(),
        show(stored),
        show(recomputed)
    ))
}
