use serde::{Deserialize, Serialize};

use super::{difference, residuals, fit_arima, ArimaModel, ArimaOrder, FitConfig, ForecastError, Series};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// `n ln(CSS / n) + 2 (p + q + 1)`
    #[default]
    Aic,
    /// `n ln(CSS / n) + (p + q + 1) ln n`
    Bic,
}

/// Information criterion of `model` on `series`, with `n` the number of
/// conditional residuals. A perfect fit scores negative infinity.
pub fn information_criterion(model: &ArimaModel, series: &Series, criterion: Criterion) -> Result<f64, ForecastError> {
    score_from(model, series, criterion, 0)
}

/// Criterion over the residuals that predict original samples at index
/// `first_target` and later; scoring every candidate of a grid from the same
/// index keeps `n` equal across candidates.
fn score_from(model: &ArimaModel, series: &Series, criterion: Criterion, first_target: usize) -> Result<f64, ForecastError> {
    let w = difference(series, model.order.d)?;
    let z: Vec<f64> = w.values.iter().map(|v| v - model.intercept).collect();
    let e = residuals(&z, &model.ar_coeffs, &model.ma_coeffs);
    let lead = model.order.p + model.order.d;
    let skip = first_target.max(lead) - model.order.d;
    let tail = &e[skip.min(e.len())..];
    let (sum, n): (f64, usize) = (tail.iter().map(|v| v * v).sum(), tail.len());
    if n == 0 {
        return Err(ForecastError::TooShort { needed: model.order.p + model.order.d + 1, got: series.len() });
    }
    let n = n as f64;
    let k = (model.order.num_params() + 1) as f64;
    let fit = if sum == 0.0 { f64::NEG_INFINITY } else { n * (sum / n).ln() };
    Ok(match criterion {
        Criterion::Aic => fit + 2.0 * k,
        Criterion::Bic => fit + k * n.ln(),
    })
}

/// Fits every candidate and keeps the best by `criterion`; ties go to the
/// smaller `p + q`, then the smaller `p`. Candidates that fail to fit are
/// skipped.
pub fn select_model(
    series: &Series,
    grid: &[ArimaOrder],
    criterion: Criterion,
    config: &FitConfig,
) -> Result<ArimaModel, ForecastError> {
    if grid.is_empty() {
        return Err(ForecastError::SelectionFailed("empty candidate grid".into()));
    }
    let first_target = grid.iter().map(|o| o.p + o.d).max().unwrap_or(0);
    let mut best: Option<(f64, ArimaModel)> = None;
    let mut failures = Vec::new();
    for &order in grid {
        let scored = fit_arima(series, order, config)
            .and_then(|m| score_from(&m, series, criterion, first_target).map(|score| (score, m)));
        let (score, model) = match scored {
            Ok(s) if !s.0.is_nan() => s,
            Ok(_) => {
                failures.push(format!("{order}: undefined criterion"));
                continue;
            }
            Err(e) => {
                failures.push(format!("{order}: {e}"));
                continue;
            }
        };
        let better = match &best {
            None => true,
            Some((best_score, best_model)) => {
                let key = |s: f64, o: ArimaOrder| (s, o.num_params(), o.p);
                let (a, b) = (key(score, order), key(*best_score, best_model.order));
                a.0 < b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2))
            }
        };
        if better {
            best = Some((score, model));
        }
    }
    best.map(|(_, m)| m)
        .ok_or_else(|| ForecastError::SelectionFailed(failures.join("; ")))
}

pub fn select_order(
    series: &Series,
    grid: &[ArimaOrder],
    criterion: Criterion,
    config: &FitConfig,
) -> Result<ArimaOrder, ForecastError> {
    select_model(series, grid, criterion, config).map(|m| m.order)
}
