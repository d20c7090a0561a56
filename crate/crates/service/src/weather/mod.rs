//! Weather service access.
//!
//! The dashboard only needs two things from a weather service: the
//! temperature at a location at some instant, and an hourly forecast.
//! [`WeatherSource`] is that interface. [`WeatherClient`] speaks it over
//! HTTP. The bundled [`stub`] server answers the same requests from CSV
//! fixtures, so simulated runs need no network access.

mod client;
pub mod stub;

pub use client::WeatherClient;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeatherError {
    #[error("weather service unreachable: {0}")]
    Transport(String),
    #[error("weather service has no data for {0}")]
    NotFound(String),
    #[error("forecast horizon must be at least one hour")]
    InvalidHorizon,
    #[error("invalid weather response: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadingSource {
    Live,
    Stub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherReading {
    pub location_id: String,
    pub wallclock: DateTime<Utc>,
    pub temperature: f64,
    pub source: ReadingSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub timestamp: DateTime<Utc>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherForecastSeries {
    pub location_id: String,
    pub horizon_hours: u32,
    pub values: Vec<ForecastPoint>,
}

impl WeatherReading {
    pub fn validate(&self) -> Result<(), WeatherError> {
        if self.temperature.is_finite() {
            Ok(())
        } else {
            Err(WeatherError::Invalid(format!("non-finite temperature for {}", self.location_id)))
        }
    }
}

impl WeatherForecastSeries {
    pub fn validate(&self) -> Result<(), WeatherError> {
        if self.horizon_hours == 0 {
            return Err(WeatherError::InvalidHorizon);
        }
        if self.values.iter().any(|p| !p.temperature.is_finite()) {
            return Err(WeatherError::Invalid("non-finite forecast temperature".into()));
        }
        if self.values.windows(2).any(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(WeatherError::Invalid("forecast timestamps not strictly increasing".into()));
        }
        Ok(())
    }
}

/// Something that can answer weather questions. `at` and `from` are on the
/// caller's clock, which for simulated runs is simulated time.
pub trait WeatherSource: Send + Sync {
    fn current(&self, location_id: &str, at: DateTime<Utc>) -> Result<WeatherReading, WeatherError>;

    fn forecast(
        &self,
        location_id: &str,
        from: DateTime<Utc>,
        horizon_hours: u32,
    ) -> Result<WeatherForecastSeries, WeatherError>;
}
