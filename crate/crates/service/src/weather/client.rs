use std::time::Duration;

use chrono::{DateTime, SecondsFormat, Utc};

use super::{WeatherError, WeatherForecastSeries, WeatherReading, WeatherSource};

/// Blocking HTTP client for the weather interface.
///
/// Nothing is cached or defaulted: a failed request is an error.
#[derive(Clone)]
pub struct WeatherClient {
    base_url: String,
    agent: ureq::Agent,
}

impl WeatherClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(2))
            .timeout(Duration::from_secs(10))
            .build();
        Self { base_url: base_url.into().trim_end_matches('/').to_string(), agent }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn fetch_current(&self, location_id: &str, at: DateTime<Utc>) -> Result<WeatherReading, WeatherError> {
        let reading: WeatherReading = self.get(
            "current",
            &[("location", location_id.to_string()), ("at", at.to_rfc3339_opts(SecondsFormat::Secs, true))],
            location_id,
        )?;
        reading.validate()?;
        Ok(reading)
    }

    pub fn fetch_forecast(
        &self,
        location_id: &str,
        from: DateTime<Utc>,
        horizon_hours: u32,
    ) -> Result<WeatherForecastSeries, WeatherError> {
        if horizon_hours == 0 {
            return Err(WeatherError::InvalidHorizon);
        }
        let series: WeatherForecastSeries = self.get(
            "forecast",
            &[
                ("location", location_id.to_string()),
                ("hours", horizon_hours.to_string()),
                ("from", from.to_rfc3339_opts(SecondsFormat::Secs, true)),
            ],
            location_id,
        )?;
        series.validate()?;
        if (series.values.len() as u32) < horizon_hours {
            return Err(WeatherError::Invalid(format!(
                "{} values for a {horizon_hours} hour horizon",
                series.values.len()
            )));
        }
        Ok(series)
    }

    fn get<T: serde::de::DeserializeOwned>(
        &self,
        path: &str,
        query: &[(&str, String)],
        location_id: &str,
    ) -> Result<T, WeatherError> {
        let mut request = self.agent.get(&format!("{}/{path}", self.base_url));
        for (k, v) in query {
            request = request.query(k, v);
        }
        match request.call() {
            Ok(response) => response.into_json().map_err(|e| WeatherError::Invalid(e.to_string())),
            Err(ureq::Error::Status(404, _)) => Err(WeatherError::NotFound(location_id.to_string())),
            Err(ureq::Error::Status(code, response)) => {
                let body = response.into_string().unwrap_or_default();
                Err(WeatherError::Invalid(format!("status {code}: {body}")))
            }
            Err(ureq::Error::Transport(t)) => Err(WeatherError::Transport(t.to_string())),
        }
    }
}

impl WeatherSource for WeatherClient {
    fn current(&self, location_id: &str, at: DateTime<Utc>) -> Result<WeatherReading, WeatherError> {
        self.fetch_current(location_id, at)
    }

    fn forecast(
        &self,
        location_id: &str,
        from: DateTime<Utc>,
        horizon_hours: u32,
    ) -> Result<WeatherForecastSeries, WeatherError> {
        self.fetch_forecast(location_id, from, horizon_hours)
    }
}
