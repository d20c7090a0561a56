//! Discrete-event simulation of the sensor network side: nodes with a
//! signal source, a sampling interval, an optional DPS node and a battery,
//! behind one gateway that talks to a real dashboard over HTTP.
//!
//! ```no_run
//! use sensorloop_sim::{run_scenario, ScenarioConfig};
//!
//! let scenario = ScenarioConfig::load("scenarios/reference_dps.scenario")?;
//! let out = run_scenario(&scenario, "http://127.0.0.1:8080")?;
//! println!("{:.1}% fewer transmissions", 100.0 * out.report.tx_reduction_ratio);
//! out.bundle().write("out/reference".as_ref())?;
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod energy;
pub mod engine;
pub mod gateway;
pub mod replay;
pub mod report;
pub mod scenario;
pub mod signal;

pub use energy::{apply_energy, EnergyEvent, EnergyModel};
pub use engine::{run_scenario, SimError, SimOutput};
pub use replay::{replay, ReplayBundle, ReplaySummary};
pub use report::{ReportBundle, ReportError, SimReport};
pub use scenario::{NodeConfig, ScenarioConfig, ScenarioError, SignalSource};
pub use signal::{sample_signal, Signal, SignalError, Trace};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/simulator.md")]
struct BookSimulator;
