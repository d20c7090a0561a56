//! ARIMA(p, d, q) fitting and forecasting.
//!
//! Fitting differences the series `d` times, centers it on its mean,
//! initializes the ARMA coefficients with the two-stage Hannan-Rissanen
//! regression and then refines them by minimizing the conditional sum of
//! squares (CSS) with a Nelder-Mead simplex. Forecasts run the usual
//! point-forecast recursion on the differenced scale and integrate back.
//!
//! Every recursion sums its AR and MA terms in ascending lag order, so two
//! parties holding the same model and history compute bit-identical
//! forecasts.

mod diff;
mod fit;
mod linalg;
mod model;
pub mod poly;
mod predict;
mod select;
mod series;
mod simplex;

pub use diff::{difference, integrate};
pub use fit::{css, fit_arima, min_fit_length, residuals};
pub use model::{ArimaModel, ArimaOrder, FitConfig, MAX_ORDER};
pub use predict::{forecast, Forecast};
pub use select::{information_criterion, select_model, select_order, Criterion};
pub use series::Series;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("expected {expected} initial values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("tick spacing must be positive")]
    InvalidSpacing,
    #[error("order ({p},{d},{q}) exceeds the cap of {cap}")]
    OrderTooLarge { p: usize, d: usize, q: usize, cap: usize },
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("fit failed: {0}")]
    FitFailure(String),
    #[error("order selection failed: {0}")]
    SelectionFailed(String),
}
