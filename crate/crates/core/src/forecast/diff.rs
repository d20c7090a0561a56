//! Ordinary differencing and its inverse.
//!
//! `integrate(difference(s, d), &s.values[..d], d)` reproduces `s` bit for
//! bit whenever every intermediate difference is exactly representable,
//! which holds for fixed-resolution readings (ADC counts times a power of
//! two). For arbitrary doubles the forward difference can round, and two
//! distinct inputs may then share the same differenced series.

use super::{ForecastError, Series};

fn diff_once(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `d`-th order difference of `series`; the result is `d` samples shorter
/// and starts `d` ticks later.
pub fn difference(series: &Series, d: usize) -> Result<Series, ForecastError> {
    if series.len() <= d {
        return Err(ForecastError::TooShort { needed: d + 1, got: series.len() });
    }
    let mut values = series.values.clone();
    for _ in 0..d {
        values = diff_once(&values);
    }
    Ok(Series::with_origin(values, series.start_tick + d as i64, series.tick_seconds))
}

/// Undo a `d`-th order difference given the first `d` values of the
/// original series.
pub fn integrate(diffed: &Series, initial_values: &[f64], d: usize) -> Result<Series, ForecastError> {
    if initial_values.len() != d {
        return Err(ForecastError::Arity { expected: d, got: initial_values.len() });
    }
    // heads[k] is the first value of the k-th difference of the original.
    let mut heads = Vec::with_capacity(d);
    let mut level = initial_values.to_vec();
    for _ in 0..d {
        heads.push(level[0]);
        level = diff_once(&level);
    }

    let mut current = diffed.values.clone();
    for head in heads.into_iter().rev() {
        let mut out = Vec::with_capacity(current.len() + 1);
        let mut acc = head;
        out.push(acc);
        for step in &current {
            acc += step;
            out.push(acc);
        }
        current = out;
    }
    Ok(Series::with_origin(current, diffed.start_tick - d as i64, diffed.tick_seconds))
}
