use serde::{Deserialize, Serialize};

use super::{difference, residuals, ArimaModel, ForecastError, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub horizon: usize,
    pub point_values: Vec<f64>,
    /// Tick of the last observed value.
    pub origin_tick: i64,
}

/// Point forecasts `horizon` steps past the end of `history`.
///
/// Residuals needed by the MA part are rebuilt from `history` with
/// pre-sample residuals set to zero, so the result depends on nothing but
/// the arguments.
pub fn forecast(model: &ArimaModel, history: &Series, horizon: usize) -> Result<Forecast, ForecastError> {
    if horizon == 0 {
        return Err(ForecastError::InvalidHorizon);
    }
    history.ensure_finite()?;
    let (p, d) = (model.order.p, model.order.d);
    let needed = (p + d).max(1);
    if history.len() < needed {
        return Err(ForecastError::TooShort { needed, got: history.len() });
    }
    if model.ar_coeffs.len() != p || model.ma_coeffs.len() != model.order.q {
        return Err(ForecastError::InvalidModel("coefficient count does not match order".into()));
    }

    // Last value of each differencing level 0..d of the history.
    let mut tails = Vec::with_capacity(d);
    for k in 0..d {
        let level = difference(history, k)?;
        tails.push(level.values[level.len() - 1]);
    }

    let w = difference(history, d)?;
    let n = w.len();
    let mut z: Vec<f64> = w.values.iter().map(|v| v - model.intercept).collect();
    let mut e = residuals(&z, &model.ar_coeffs, &model.ma_coeffs);
    z.reserve(horizon);
    e.reserve(horizon);

    let mut out = Vec::with_capacity(horizon);
    for step in 0..horizon {
        let t = n + step;
        let mut value = 0.0;
        for (i, phi) in model.ar_coeffs.iter().enumerate() {
            value += phi * z[t - 1 - i];
        }
        for (j, theta) in model.ma_coeffs.iter().enumerate() {
            if t > j {
                value += theta * e[t - 1 - j];
            }
        }
        z.push(value);
        e.push(0.0);

        let mut level_value = value + model.intercept;
        for k in (0..d).rev() {
            tails[k] += level_value;
            level_value = tails[k];
        }
        if !level_value.is_finite() {
            return Err(ForecastError::InvalidModel(format!("forecast diverged at step {}", step + 1)));
        }
        out.push(level_value);
    }

    Ok(Forecast { horizon, point_values: out, origin_tick: history.last_tick() })
}
