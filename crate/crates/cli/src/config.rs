//! Configuration of `sensorloop serve`.
//!
//! ```toml
//! [dashboard]
//! bind = "127.0.0.1"
//! port = 8080
//! data_dir = "sensorloop-data"
//!
//! [weather]
//! port = 8081
//! fixtures_dir = "scenarios/fixtures/weather"
//! ```
//!
//! `SENSORLOOP_DASHBOARD_PORT` and `SENSORLOOP_WEATHER_PORT` override the
//! ports from the file.

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DASHBOARD_PORT_ENV: &str = "SENSORLOOP_DASHBOARD_PORT";
pub const WEATHER_PORT_ENV: &str = "SENSORLOOP_WEATHER_PORT";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub dashboard: DashboardSection,
    pub weather: WeatherSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DashboardSection {
    pub bind: IpAddr,
    pub port: u16,
    pub data_dir: PathBuf,
    pub listener_queue_capacity: usize,
}

impl Default for DashboardSection {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            data_dir: "sensorloop-data".into(),
            listener_queue_capacity: 1024,
        }
    }
}

/// Either fixtures for the bundled stub, or the URL of a weather service
/// that is already running. With neither, weather rules fall back to eager
/// sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatherSection {
    pub port: u16,
    pub fixtures_dir: Option<PathBuf>,
    pub url: Option<String>,
}

impl Default for WeatherSection {
    fn default() -> Self {
        Self { port: 8081, fixtures_dir: None, url: None }
    }
}

impl ServeConfig {
    /// Reads `path` if given, resolving relative directories against the
    /// file's location, then applies the environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut config = match path {
            None => ServeConfig::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                let mut c: ServeConfig =
                    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                let base = path.parent().unwrap_or(Path::new(""));
                c.dashboard.data_dir = base.join(&c.dashboard.data_dir);
                c.weather.fixtures_dir = c.weather.fixtures_dir.map(|d| base.join(d));
                c
            }
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        config.validate()?;
        Ok(config)
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        let port = |name: &str, raw: String| {
            raw.trim().parse::<u16>().map_err(|_| CliError::Validation(format!("{name}={raw:?} is not a port number")))
        };
        if let Some(raw) = lookup(DASHBOARD_PORT_ENV) {
            self.dashboard.port = port(DASHBOARD_PORT_ENV, raw)?;
        }
        if let Some(raw) = lookup(WEATHER_PORT_ENV) {
            self.weather.port = port(WEATHER_PORT_ENV, raw)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.weather.fixtures_dir.is_some() && self.weather.url.is_some() {
            return Err(CliError::Validation("weather: set either fixtures_dir or url, not both".into()));
        }
        if self.dashboard.listener_queue_capacity == 0 {
            return Err(CliError::Validation("dashboard.listener_queue_capacity must be positive".into()));
        }
        Ok(())
    }

    pub fn dashboard_addr(&self) -> SocketAddr {
        SocketAddr::new(self.dashboard.bind, self.dashboard.port)
    }

    pub fn weather_addr(&self) -> SocketAddr {
        SocketAddr::new(self.dashboard.bind, self.weather.port)
    }

    /// Where `simulate` finds a dashboard started with this configuration.
    pub fn dashboard_url(&self) -> String {
        format!("http://{}", self.dashboard_addr())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides_ports() {
        let mut c = ServeConfig::default();
        c.apply_env(|k| (k == DASHBOARD_PORT_ENV).then(|| "9000".to_string())).unwrap();
        assert_eq!((c.dashboard.port, c.weather.port), (9000, 8081));
        c.apply_env(|k| (k == WEATHER_PORT_ENV).then(|| "9001".to_string())).unwrap();
        assert_eq!(c.weather.port, 9001);
        assert!(matches!(c.apply_env(|_| Some("http".into())), Err(CliError::Validation(_))));
    }

    #[test]
    fn file_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("serve.toml");
        std::fs::write(&path, "[dashboard]\nport = 0\ndata_dir = \"d\"\n[weather]\nfixtures_dir = \"fx\"\n").unwrap();
        let c = ServeConfig::load(Some(&path)).unwrap();
        assert_eq!(c.dashboard.data_dir, dir.path().join("d"));
        assert_eq!(c.weather.fixtures_dir, Some(dir.path().join("fx")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("serve.toml");
        std::fs::write(&path, "[dashboard]\nprot = 1\n").unwrap();
        assert!(matches!(ServeConfig::load(Some(&path)), Err(CliError::Validation(_))));
    }
}
