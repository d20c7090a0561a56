//! The `sensorloop` command line, as a library so tests can drive the same
//! code paths as the binary.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{replay, report, simulate, start_services, Audited, EmbeddedStack, ReplayArgs, SimulateArgs};
pub use config::ServeConfig;
pub use error::CliError;
