use serde::{Deserialize, Serialize};

use crate::forecast::{ArimaModel, ArimaOrder};

/// A model pushed from the sink to a node.
///
/// Field order is the canonical wire order. `origin_tick` is the sink tick
/// at which the model was fitted; the node must be at the same tick when it
/// applies the update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelUpdateMsg {
    pub order: ArimaOrder,
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    pub intercept: f64,
    pub noise_variance: f64,
    pub origin_tick: u64,
}

impl ModelUpdateMsg {
    pub fn from_model(model: &ArimaModel, origin_tick: u64) -> Self {
        Self {
            order: model.order,
            ar_coeffs: model.ar_coeffs.clone(),
            ma_coeffs: model.ma_coeffs.clone(),
            intercept: model.intercept,
            noise_variance: model.noise_variance,
            origin_tick,
        }
    }

    /// The carried model. The fitting length is not transmitted and comes
    /// back as zero on both sides.
    pub fn to_model(&self) -> ArimaModel {
        ArimaModel {
            order: self.order,
            ar_coeffs: self.ar_coeffs.clone(),
            ma_coeffs: self.ma_coeffs.clone(),
            intercept: self.intercept,
            noise_variance: self.noise_variance,
            fitted_on_length: 0,
        }
    }
}
