use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sensorloop_cli::{commands, Audited, CliError, ReplayArgs, ServeConfig, SimulateArgs};
use sensorloop_sim::report::SimReport;
use sensorloop_sim::ReplaySummary;

#[derive(Parser)]
#[command(name = "sensorloop", version, about = "Self-managed sensor network platform")]
struct Cli {
    /// Log filter, e.g. `info` or `sensorloop_service=debug`.
    #[arg(long, global = true, env = "SENSORLOOP_LOG", default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dashboard and, if configured, the stub weather service until
    /// interrupted.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a scenario and write its report bundle.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: PathBuf,
        /// Start a fresh dashboard in this process instead of using a
        /// running one.
        #[arg(long)]
        embedded: bool,
        /// Serve configuration used to locate a running dashboard.
        #[arg(long, conflicts_with = "dashboard_url")]
        config: Option<PathBuf>,
        #[arg(long, env = "SENSORLOOP_DASHBOARD_URL")]
        dashboard_url: Option<String>,
    },
    /// Replay a trace through the DPS node and sink, offline.
    Replay {
        /// CSV with `timestamp,value` columns.
        #[arg(long)]
        trace: PathBuf,
        /// TOML file with DPS settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value = "timestamp")]
        time_column: String,
        #[arg(long, default_value = "value")]
        value_column: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Recompute a bundle's summary from its logs and compare.
    Report {
        /// Directory written by `simulate` or `replay`.
        bundle: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_new(&cli.log).unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Serve { config } => serve(ServeConfig::load(config.as_deref())?),
        Command::Simulate { scenario, seed, output, embedded, config, dashboard_url } => {
            let dashboard_url = match dashboard_url {
                Some(url) => url,
                None => ServeConfig::load(config.as_deref())?.dashboard_url(),
            };
            let args = SimulateArgs { scenario, seed, output: output.clone(), embedded, dashboard_url };
            let out = commands::simulate(&args)?;
            print_simulation(&out.report);
            if let Some(runtime) = out.report.runtime {
                eprintln!("simulated in {:.2} s", runtime.as_secs_f64());
            }
            println!("bundle written to {}", output.display());
            Ok(())
        }
        Command::Replay { trace, config, epsilon, time_column, value_column, output } => {
            let args = ReplayArgs { trace, time_column, value_column, config, epsilon, output: output.clone() };
            let bundle = commands::replay(&args)?;
            print_replay(&bundle.summary);
            println!("bundle written to {}", output.display());
            Ok(())
        }
        Command::Report { bundle } => {
            match commands::report(&bundle)? {
                Audited::Simulation(r) => print_simulation(&r),
                Audited::Replay(s) => print_replay(&s),
            }
            println!("summary matches the logs");
            Ok(())
        }
    }
}

fn serve(config: ServeConfig) -> Result<(), CliError> {
    let services = commands::start_services(&config)?;
    if let Some(w) = &services.weather {
        println!("weather stub ready at {}", w.url());
    }
    println!("dashboard ready at {} (data in {})", services.dashboard.url(), config.dashboard.data_dir.display());
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    runtime.block_on(tokio::signal::ctrl_c()).map_err(|e| CliError::Io(e.to_string()))?;
    println!("shutting down");
    services.dashboard.server.shutdown().map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(w) = services.weather {
        w.shutdown().map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

fn print_simulation(r: &SimReport) {
    println!(
        "{} (seed {}): {} samples, {} transmissions, {:.1}% fewer than sending every sample",
        r.scenario,
        r.seed,
        r.total_samples,
        r.total_tx,
        100.0 * r.tx_reduction_ratio
    );
    for n in &r.nodes {
        let halted = n.halted_at_s.map(|t| format!("  halted at {t} s")).unwrap_or_default();
        println!(
            "  {:<16} samples {:>6}  tx {:>6}  suppressed {:>6}  rx {:>4}  energy {:>9.3} J  max error {:.4}{halted}",
            n.sensor_id,
            n.samples_taken,
            n.transmissions,
            n.suppressions,
            n.receptions,
            n.energy_spent_joules,
            n.max_reconstruction_error
        );
    }
}

fn print_replay(s: &ReplaySummary) {
    println!(
        "{} samples, {} transmitted, suppression {:.3} ({:.3} after init), max error {:.4} (epsilon {}), {} model updates",
        s.samples,
        s.transmissions,
        s.suppression_ratio,
        s.suppression_ratio_after_init,
        s.max_reconstruction_error,
        s.threshold_epsilon,
        s.model_updates
    );
}
