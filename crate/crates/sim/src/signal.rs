use std::f64::consts::TAU;
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::scenario::{ScenarioConfig, SignalSource};

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("time {t} is outside the trace ({first}..={last})")]
    OutOfRange { t: i64, first: i64, last: i64 },
    #[error("trace row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("trace: {0}")]
    Trace(String),
}

/// A time-ordered series read from CSV.
///
/// Timestamps are either integer seconds or RFC 3339 datetimes (stored as
/// unix seconds); one file must not mix the two.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub times: Vec<i64>,
    pub values: Vec<f64>,
    /// The timestamps were datetimes.
    pub absolute: bool,
}

impl Trace {
    pub fn parse(text: &str, time_column: &str, value_column: &str) -> Result<Self, SignalError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| SignalError::Trace(e.to_string()))?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| SignalError::Trace(format!("no column {name:?} in header {:?}", headers.iter().collect::<Vec<_>>())))
        };
        let (ti, vi) = (column(time_column)?, column(value_column)?);
        let mut trace = Trace { times: Vec::new(), values: Vec::new(), absolute: false };
        for (i, record) in reader.records().enumerate() {
            // header is row 1
            let row = i + 2;
            let bad = |message: String| SignalError::Row { row, message };
            let record = record.map_err(|e| bad(e.to_string()))?;
            let (ts, vs) = (record.get(ti).unwrap_or(""), record.get(vi).unwrap_or(""));
            let (t, absolute) = match ts.parse::<i64>() {
                Ok(t) => (t, false),
                Err(_) => match DateTime::parse_from_rfc3339(ts) {
                    Ok(d) => (d.timestamp(), true),
                    Err(_) => return Err(bad(format!("bad timestamp {ts:?}"))),
                },
            };
            let v: f64 = vs.parse().map_err(|_| bad(format!("bad value {vs:?}")))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value {vs:?}")));
            }
            if trace.times.is_empty() {
                trace.absolute = absolute;
            } else if absolute != trace.absolute {
                return Err(bad("mixes integer and datetime timestamps".into()));
            } else if t <= *trace.times.last().unwrap() {
                return Err(bad(format!("timestamp {ts} is not after the previous row")));
            }
            trace.times.push(t);
            trace.values.push(v);
        }
        if trace.times.is_empty() {
            return Err(SignalError::Trace("no rows".into()));
        }
        Ok(trace)
    }

    pub fn load(path: &Path, time_column: &str, value_column: &str) -> Result<Self, SignalError> {
        let text = std::fs::read_to_string(path).map_err(|e| SignalError::Trace(format!("{}: {e}", path.display())))?;
        Self::parse(&text, time_column, value_column)
    }

    /// The last value at or before `t`.
    pub fn value_at(&self, t: i64) -> Result<f64, SignalError> {
        let n = self.times.partition_point(|&x| x <= t);
        let (first, last) = (self.times[0], *self.times.last().unwrap());
        if n == 0 || t > last {
            return Err(SignalError::OutOfRange { t, first, last });
        }
        Ok(self.values[n - 1])
    }
}

/// A signal ready for sampling.
#[derive(Debug, Clone)]
pub enum Signal {
    Synthetic { base_level: f64, daily_amplitude: f64, noise_std: f64, noise_seed: u64 },
    /// `offset` is added to simulated time before the lookup.
    Trace { trace: Trace, offset: i64 },
}

impl Signal {
    /// `index` is the node's position in the scenario, the default noise
    /// stream.
    pub fn prepare(source: &SignalSource, scenario: &ScenarioConfig, index: usize) -> Result<Self, SignalError> {
        Ok(match source {
            SignalSource::Synthetic { base_level, daily_amplitude, noise_std, seed } => Signal::Synthetic {
                base_level: *base_level,
                daily_amplitude: *daily_amplitude,
                noise_std: *noise_std,
                noise_seed: mix(scenario.seed, seed.unwrap_or(index as u64)),
            },
            SignalSource::TraceFile { path, time_column, value_column } => {
                let trace = Trace::load(&scenario.resolve(path), time_column, value_column)?;
                let offset = if trace.absolute { scenario.start.timestamp() } else { 0 };
                Signal::Trace { trace, offset }
            }
        })
    }

    /// Constant `level`, no noise.
    pub fn constant(level: f64) -> Self {
        Signal::Synthetic { base_level: level, daily_amplitude: 0.0, noise_std: 0.0, noise_seed: 0 }
    }
}

fn mix(a: u64, b: u64) -> u64 {
    a ^ b.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(31)
}

/// Value of `signal` at simulated second `t`. A pure function: the noise
/// term is drawn from a generator keyed by the seed and `t` alone.
pub fn sample_signal(signal: &Signal, t: i64) -> Result<f64, SignalError> {
    match signal {
        Signal::Synthetic { base_level, daily_amplitude, noise_std, noise_seed } => {
            let mut v = base_level + daily_amplitude * (TAU * (t as f64 / 86_400.0)).sin();
            if *noise_std > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(*noise_seed);
                rng.set_stream(t as u64);
                let z: f64 = StandardNormal.sample(&mut rng);
                v += noise_std * z;
            }
            Ok(v)
        }
        Signal::Trace { trace, offset } => trace.value_at(t + offset),
    }
}

/// Wallclock of a simulated second.
pub fn wallclock(start: DateTime<Utc>, t: i64) -> DateTime<Utc> {
    start + chrono::Duration::seconds(t)
}
