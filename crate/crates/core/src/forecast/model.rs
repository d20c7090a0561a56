use serde::{Deserialize, Serialize};

use super::{poly, ForecastError};

/// Default cap on each of p, d and q.
pub const MAX_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }

    pub fn num_params(&self) -> usize {
        self.p + self.q
    }

    pub fn check_cap(&self, cap: usize) -> Result<(), ForecastError> {
        if self.p > cap || self.d > cap || self.q > cap {
            return Err(ForecastError::OrderTooLarge { p: self.p, d: self.d, q: self.q, cap });
        }
        Ok(())
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

/// A fitted ARIMA model.
///
/// With `w` the `d`-times differenced series and `z = w - intercept`:
///
/// `z[t] = ar[0] z[t-1] + ... + ar[p-1] z[t-p] + e[t] + ma[0] e[t-1] + ... + ma[q-1] e[t-q]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    pub intercept: f64,
    pub noise_variance: f64,
    pub fitted_on_length: usize,
}

impl ArimaModel {
    /// Checks coefficient counts, finiteness, stationarity of the AR part
    /// and invertibility of the MA part.
    pub fn validate(&self) -> Result<(), ForecastError> {
        let invalid = |msg: String| Err(ForecastError::InvalidModel(msg));
        if self.ar_coeffs.len() != self.order.p {
            return invalid(format!("{} AR coefficients for p = {}", self.ar_coeffs.len(), self.order.p));
        }
        if self.ma_coeffs.len() != self.order.q {
            return invalid(format!("{} MA coefficients for q = {}", self.ma_coeffs.len(), self.order.q));
        }
        let all_finite = self
            .ar_coeffs
            .iter()
            .chain(&self.ma_coeffs)
            .chain([&self.intercept, &self.noise_variance])
            .all(|v| v.is_finite());
        if !all_finite {
            return invalid("non-finite parameter".into());
        }
        if self.noise_variance < 0.0 {
            return invalid("negative noise variance".into());
        }
        if !poly::is_stable(&self.ar_coeffs) {
            return invalid("AR polynomial has a root on or inside the unit circle".into());
        }
        let ma_as_ar: Vec<f64> = self.ma_coeffs.iter().map(|v| -v).collect();
        if !poly::is_stable(&ma_as_ar) {
            return invalid("MA polynomial has a root on or inside the unit circle".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_order: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Order of the long autoregression used for the residual proxy;
    /// chosen from the sample size when absent.
    pub long_ar_order: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { max_order: MAX_ORDER, max_iterations: 2000, tolerance: 1e-10, long_ar_order: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(ar: Vec<f64>, ma: Vec<f64>) -> ArimaModel {
        ArimaModel {
            order: ArimaOrder::new(ar.len(), 0, ma.len()),
            ar_coeffs: ar,
            ma_coeffs: ma,
            intercept: 0.0,
            noise_variance: 1.0,
            fitted_on_length: 100,
        }
    }

    #[test]
    fn validate_checks_roots_and_lengths() {
        assert!(model(vec![0.5], vec![0.3]).validate().is_ok());
        assert!(model(vec![1.01], vec![]).validate().is_err());
        assert!(model(vec![], vec![1.0]).validate().is_err());
        let mut m = model(vec![0.5], vec![]);
        m.order.p = 2;
        assert!(m.validate().is_err());
        let mut m = model(vec![0.5], vec![]);
        m.noise_variance = -1.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn cap() {
        assert!(ArimaOrder::new(5, 2, 5).check_cap(5).is_ok());
        assert!(ArimaOrder::new(6, 0, 0).check_cap(5).is_err());
    }
}
