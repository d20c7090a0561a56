//! Forecasting and decision logic for a self-managed sensor network.
//!
//! * [`forecast`]: ARIMA fitting, order selection and point forecasts.
//! * [`dps`]: the two mirrored halves of the dual prediction scheme.
//! * [`rules`]: time-of-day sampling schedules and the weather agreement rule.
//! * [`protocol`]: measurement and reconfiguration records shared by the
//!   dashboard, the gateway and the simulator.

pub mod forecast;
pub mod dps;
pub mod protocol;
pub mod rules;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/forecasting.md")]
    struct Forecasting;
    #[doc = include_str!("../../../book/src/dps.md")]
    struct Dps;
    #[doc = include_str!("../../../book/src/rules.md")]
    struct Rules;
}
