//! Fixture-backed weather server.
//!
//! Fixtures are CSV files named `<location>.csv` with a
//! `timestamp,temperature` header and RFC 3339 timestamps in increasing
//! order. A request for instant `t` answers with the last fixture row at or
//! before `t`, so answers depend only on location and requested time.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, Duration, Utc};
use serde::Deserialize;

use super::{
    ForecastPoint, ReadingSource, WeatherError, WeatherForecastSeries, WeatherReading, WeatherSource,
};

/// Longest forecast the stub hands out.
pub const MAX_HORIZON_HOURS: u32 = 240;

#[derive(Debug, Clone, Default)]
pub struct Fixtures {
    locations: BTreeMap<String, Vec<(DateTime<Utc>, f64)>>,
}

#[derive(Debug, Deserialize)]
struct Row {
    timestamp: DateTime<Utc>,
    temperature: f64,
}

impl Fixtures {
    /// Loads every `*.csv` in `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, String> {
        let dir = dir.as_ref();
        let entries = std::fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let mut fixtures = Fixtures::default();
        let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for path in paths {
            if path.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            let location = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            fixtures.insert_csv(&location, &text).map_err(|e| format!("{}: {e}", path.display()))?;
        }
        Ok(fixtures)
    }

    pub fn insert_csv(&mut self, location: &str, csv_text: &str) -> Result<(), String> {
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        let mut rows = Vec::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| format!("row {}: {e}", i + 2))?;
            if !row.temperature.is_finite() {
                return Err(format!("row {}: non-finite temperature", i + 2));
            }
            rows.push((row.timestamp, row.temperature));
        }
        self.insert(location, rows)
    }

    pub fn insert(&mut self, location: &str, rows: Vec<(DateTime<Utc>, f64)>) -> Result<(), String> {
        if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err("timestamps are not strictly increasing".into());
        }
        self.locations.insert(location.to_string(), rows);
        Ok(())
    }

    pub fn locations(&self) -> impl Iterator<Item = &str> {
        self.locations.keys().map(String::as_str)
    }

    /// Fixture value in force at `at`.
    pub fn value_at(&self, location: &str, at: DateTime<Utc>) -> Result<f64, WeatherError> {
        let rows = self.locations.get(location).ok_or_else(|| WeatherError::NotFound(location.into()))?;
        let n = rows.partition_point(|(t, _)| *t <= at);
        match n {
            0 => Err(WeatherError::NotFound(format!("{location} before {at}"))),
            n => Ok(rows[n - 1].1),
        }
    }
}

impl WeatherSource for Fixtures {
    fn current(&self, location_id: &str, at: DateTime<Utc>) -> Result<WeatherReading, WeatherError> {
        Ok(WeatherReading {
            location_id: location_id.into(),
            wallclock: at,
            temperature: self.value_at(location_id, at)?,
            source: ReadingSource::Stub,
        })
    }

    fn forecast(
        &self,
        location_id: &str,
        from: DateTime<Utc>,
        horizon_hours: u32,
    ) -> Result<WeatherForecastSeries, WeatherError> {
        if horizon_hours == 0 || horizon_hours > MAX_HORIZON_HOURS {
            return Err(WeatherError::InvalidHorizon);
        }
        let values = (0..horizon_hours as i64)
            .map(|h| {
                let timestamp = from + Duration::hours(h);
                Ok(ForecastPoint { timestamp, temperature: self.value_at(location_id, timestamp)? })
            })
            .collect::<Result<_, WeatherError>>()?;
        Ok(WeatherForecastSeries { location_id: location_id.into(), horizon_hours, values })
    }
}

#[derive(Debug, Deserialize)]
struct CurrentQuery {
    location: String,
    at: Option<DateTime<Utc>>,
}

#[derive(Debug, Deserialize)]
struct ForecastQuery {
    location: String,
    hours: u32,
    from: Option<DateTime<Utc>>,
}

fn reply<T: serde::Serialize>(result: Result<T, WeatherError>) -> Response {
    match result {
        Ok(body) => Json(body).into_response(),
        Err(e) => {
            let status = match e {
                WeatherError::NotFound(_) => StatusCode::NOT_FOUND,
                WeatherError::InvalidHorizon | WeatherError::Invalid(_) => StatusCode::BAD_REQUEST,
                WeatherError::Transport(_) => StatusCode::BAD_GATEWAY,
            };
            (status, Json(serde_json::json!({ "error": e.to_string() }))).into_response()
        }
    }
}

/// `GET /current?location=..&at=..`, `GET /forecast?location=..&hours=..&from=..`
/// and `GET /locations`. Without `at`/`from` the server's own clock is used.
pub fn router(fixtures: Arc<Fixtures>) -> Router {
    Router::new()
        .route(
            "/current",
            get(|State(f): State<Arc<Fixtures>>, Query(q): Query<CurrentQuery>| async move {
                reply(f.current(&q.location, q.at.unwrap_or_else(Utc::now)))
            }),
        )
        .route(
            "/forecast",
            get(|State(f): State<Arc<Fixtures>>, Query(q): Query<ForecastQuery>| async move {
                reply(f.forecast(&q.location, q.from.unwrap_or_else(Utc::now), q.hours))
            }),
        )
        .route(
            "/locations",
            get(|State(f): State<Arc<Fixtures>>| async move {
                Json(f.locations().map(str::to_string).collect::<Vec<_>>())
            }),
        )
        .with_state(fixtures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn fixtures() -> Fixtures {
        let mut f = Fixtures::default();
        f.insert_csv(
            "bcn",
            "timestamp,temperature\n2016-06-07T00:00:00Z,17.0\n2016-06-07T01:00:00Z,18.5\n2016-06-07T02:00:00Z,19.0\n",
        )
        .unwrap();
        f
    }

    #[test]
    fn value_at_or_before() {
        let f = fixtures();
        let t = |h, m| Utc.with_ymd_and_hms(2016, 6, 7, h, m, 0).unwrap();
        assert_eq!(f.value_at("bcn", t(1, 0)).unwrap(), 18.5);
        assert_eq!(f.value_at("bcn", t(1, 59)).unwrap(), 18.5);
        assert_eq!(f.value_at("bcn", t(9, 0)).unwrap(), 19.0);
        assert!(matches!(f.value_at("bcn", t(0, 0) - Duration::seconds(1)), Err(WeatherError::NotFound(_))));
        assert!(matches!(f.value_at("mad", t(1, 0)), Err(WeatherError::NotFound(_))));
    }

    #[test]
    fn forecast_is_hourly() {
        let f = fixtures();
        let from = Utc.with_ymd_and_hms(2016, 6, 7, 0, 30, 0).unwrap();
        let s = f.forecast("bcn", from, 3).unwrap();
        let temps: Vec<f64> = s.values.iter().map(|p| p.temperature).collect();
        assert_eq!(temps, vec![17.0, 18.5, 19.0]);
        s.validate().unwrap();
        assert_eq!(f.forecast("bcn", from, 0), Err(WeatherError::InvalidHorizon));
    }

    #[test]
    fn unordered_fixture_rejected() {
        let mut f = Fixtures::default();
        let text = "timestamp,temperature\n2016-06-07T01:00:00Z,1\n2016-06-07T00:00:00Z,2\n";
        assert!(f.insert_csv("x", text).is_err());
    }
}
