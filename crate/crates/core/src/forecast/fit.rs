use super::linalg::least_squares;
use super::simplex::{self, SimplexOptions};
use super::{difference, poly, ArimaModel, ArimaOrder, FitConfig, ForecastError, Series};

/// Shortest series `fit_arima` accepts for `order`.
pub fn min_fit_length(order: ArimaOrder) -> usize {
    30.max(10 * order.num_params() + order.d)
}

/// One-step prediction residuals of a centered series, conditioning on the
/// first `p` values and taking pre-sample residuals as zero. Entries before
/// index `p` are zero.
pub fn residuals(z: &[f64], ar: &[f64], ma: &[f64]) -> Vec<f64> {
    let p = ar.len();
    let mut e = vec![0.0; z.len()];
    for t in p..z.len() {
        let mut pred = 0.0;
        for (i, phi) in ar.iter().enumerate() {
            pred += phi * z[t - 1 - i];
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                pred += theta * e[t - 1 - j];
            }
        }
        e[t] = z[t] - pred;
    }
    e
}

/// Conditional sum of squares and the number of residuals it sums.
pub fn css(z: &[f64], ar: &[f64], ma: &[f64]) -> (f64, usize) {
    let p = ar.len();
    let e = residuals(z, ar, ma);
    let sum = e[p.min(e.len())..].iter().map(|v| v * v).sum();
    (sum, z.len().saturating_sub(p))
}

fn long_ar_order(n: usize, order: ArimaOrder, config: &FitConfig) -> usize {
    let floor = order.p.max(order.q) + 1;
    config.long_ar_order.unwrap_or_else(|| {
        let by_size = (10.0 * (n as f64).log10()).ceil() as usize;
        by_size.min((n / 5).max(floor)).max(floor)
    })
}

fn lagged_rows(z: &[f64], from: usize, lags: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rows = (from..z.len()).map(|t| (1..=lags).map(|k| z[t - k]).collect()).collect();
    (rows, z[from..].to_vec())
}

/// Two-stage Hannan-Rissanen estimate: a long autoregression supplies
/// residual proxies, then the ARMA regression runs on lagged values and
/// lagged proxies. Falls back to zeros when either regression is singular.
fn hannan_rissanen(z: &[f64], order: ArimaOrder, config: &FitConfig) -> Vec<f64> {
    let (p, q) = (order.p, order.q);
    let zeros = vec![0.0; p + q];
    if p + q == 0 {
        return zeros;
    }
    if q == 0 {
        let (rows, y) = lagged_rows(z, p, p);
        return least_squares(&rows, &y).unwrap_or(zeros);
    }

    let m = long_ar_order(z.len(), order, config);
    if z.len() <= m + q + p + q {
        return zeros;
    }
    let (rows, y) = lagged_rows(z, m, m);
    let Some(long) = least_squares(&rows, &y) else {
        return zeros;
    };
    let mut proxy = vec![0.0; z.len()];
    for t in m..z.len() {
        let mut pred = 0.0;
        for (i, a) in long.iter().enumerate() {
            pred += a * z[t - 1 - i];
        }
        proxy[t] = z[t] - pred;
    }

    let start = m + q;
    let rows: Vec<Vec<f64>> = (start..z.len())
        .map(|t| (1..=p).map(|k| z[t - k]).chain((1..=q).map(|k| proxy[t - k])).collect())
        .collect();
    least_squares(&rows, &z[start..]).unwrap_or(zeros)
}

fn make_stable(coeffs: &[f64]) -> Vec<f64> {
    if poly::is_stable(coeffs) {
        coeffs.to_vec()
    } else {
        poly::reflect_into_stable(coeffs)
    }
}

fn make_invertible(ma: &[f64]) -> Vec<f64> {
    let as_ar: Vec<f64> = ma.iter().map(|v| -v).collect();
    make_stable(&as_ar).into_iter().map(|v| -v).collect()
}

/// Fits an ARIMA model of the given order.
pub fn fit_arima(series: &Series, order: ArimaOrder, config: &FitConfig) -> Result<ArimaModel, ForecastError> {
    order.check_cap(config.max_order)?;
    series.ensure_finite()?;
    let needed = min_fit_length(order);
    if series.len() < needed {
        return Err(ForecastError::TooShort { needed, got: series.len() });
    }

    let w = difference(series, order.d)?;
    let intercept = w.values.iter().sum::<f64>() / w.len() as f64;
    let z: Vec<f64> = w.values.iter().map(|v| v - intercept).collect();
    let (p, q) = (order.p, order.q);

    let degenerate = z.iter().all(|v| *v == 0.0);
    let (ar, ma) = if degenerate || p + q == 0 {
        (vec![0.0; p], vec![0.0; q])
    } else {
        let init = hannan_rissanen(&z, order, config);
        let mut start = make_stable(&init[..p]);
        start.extend(make_invertible(&init[p..]));

        let objective = |x: &[f64]| css(&z, &x[..p], &x[p..]).0;
        let opts = SimplexOptions {
            max_iterations: config.max_iterations,
            tolerance: config.tolerance,
            initial_step: 0.1,
        };
        let best = simplex::minimize(objective, &start, opts);
        tracing::trace!(%order, iterations = best.iterations, "css refinement finished");
        (make_stable(&best.point[..p]), make_invertible(&best.point[p..]))
    };

    let (sum, count) = css(&z, &ar, &ma);
    let model = ArimaModel {
        order,
        ar_coeffs: ar,
        ma_coeffs: ma,
        intercept,
        noise_variance: if count == 0 { 0.0 } else { sum / count as f64 },
        fitted_on_length: series.len(),
    };
    model.validate().map_err(|e| ForecastError::FitFailure(e.to_string()))?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_mean_model() {
        let s = Series::new(vec![7.0; 40]);
        let m = fit_arima(&s, ArimaOrder::new(0, 0, 0), &FitConfig::default()).unwrap();
        assert_eq!(m.intercept, 7.0);
        assert_eq!(m.noise_variance, 0.0);
        assert!(m.ar_coeffs.is_empty() && m.ma_coeffs.is_empty());
    }

    #[test]
    fn constant_series_with_ar_terms_is_degenerate_but_valid() {
        let s = Series::new(vec![3.25; 60]);
        let m = fit_arima(&s, ArimaOrder::new(2, 1, 1), &FitConfig::default()).unwrap();
        assert_eq!(m.ar_coeffs, vec![0.0, 0.0]);
        assert_eq!(m.ma_coeffs, vec![0.0]);
        assert_eq!(m.noise_variance, 0.0);
    }

    #[test]
    fn length_precondition() {
        let s = Series::new((0..35).map(|i| (i as f64).sin()).collect());
        let err = fit_arima(&s, ArimaOrder::new(2, 0, 2), &FitConfig::default()).unwrap_err();
        assert_eq!(err, ForecastError::TooShort { needed: 40, got: 35 });
        assert_eq!(min_fit_length(ArimaOrder::new(1, 0, 0)), 30);
        assert_eq!(min_fit_length(ArimaOrder::new(2, 1, 2)), 41);
    }

    #[test]
    fn rejects_non_finite_and_oversized_order() {
        let mut v = vec![1.0; 50];
        v[7] = f64::NAN;
        let err = fit_arima(&Series::new(v), ArimaOrder::new(1, 0, 0), &FitConfig::default());
        assert_eq!(err.unwrap_err(), ForecastError::NonFinite { index: 7 });
        let s = Series::new(vec![1.0; 200]);
        assert!(matches!(
            fit_arima(&s, ArimaOrder::new(6, 0, 0), &FitConfig::default()),
            Err(ForecastError::OrderTooLarge { .. })
        ));
    }

    #[test]
    fn residuals_match_hand_computation() {
        // z = [1, 2, 0.5], phi = 0.5, theta = 0.2
        // e1 = 2 - 0.5*1 - 0.2*0 = 1.5 ; e2 = 0.5 - 0.5*2 - 0.2*1.5 = -0.8
        let e = residuals(&[1.0, 2.0, 0.5], &[0.5], &[0.2]);
        assert_eq!(e[0], 0.0);
        assert!((e[1] - 1.5).abs() < 1e-15);
        assert!((e[2] + 0.8).abs() < 1e-15);
        let (sum, n) = css(&[1.0, 2.0, 0.5], &[0.5], &[0.2]);
        assert_eq!(n, 2);
        assert!((sum - (2.25 + 0.64)).abs() < 1e-12);
    }
}
