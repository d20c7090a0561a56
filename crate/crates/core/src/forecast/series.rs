use serde::{Deserialize, Serialize};

use super::ForecastError;

/// A uniformly spaced run of samples, one value per tick.
///
/// Sample `i` sits at tick `start_tick + i`, i.e. at
/// `(start_tick + i) * tick_seconds` seconds on whatever clock the caller
/// uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub values: Vec<f64>,
    pub start_tick: i64,
    pub tick_seconds: u32,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, start_tick: 0, tick_seconds: 1 }
    }

    pub fn with_origin(values: Vec<f64>, start_tick: i64, tick_seconds: u32) -> Self {
        Self { values, start_tick, tick_seconds }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Tick of the last sample, or `start_tick - 1` when empty.
    pub fn last_tick(&self) -> i64 {
        self.start_tick + self.values.len() as i64 - 1
    }

    /// The trailing `n` samples (all of them if the series is shorter).
    pub fn tail(&self, n: usize) -> Series {
        let skip = self.values.len().saturating_sub(n);
        Series {
            values: self.values[skip..].to_vec(),
            start_tick: self.start_tick + skip as i64,
            tick_seconds: self.tick_seconds,
        }
    }

    /// Drops all but the trailing `n` samples. Tick numbering is kept.
    pub fn keep_last(&mut self, n: usize) {
        let skip = self.values.len().saturating_sub(n);
        if skip > 0 {
            self.values.drain(..skip);
            self.start_tick += skip as i64;
        }
    }

    pub fn ensure_finite(&self) -> Result<(), ForecastError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(ForecastError::NonFinite { index }),
            None => Ok(()),
        }
    }
}

impl From<Vec<f64>> for Series {
    fn from(values: Vec<f64>) -> Self {
        Series::new(values)
    }
}
