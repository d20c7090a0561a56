use serde::{Deserialize, Serialize};

use super::RuleError;
use crate::forecast::Series;
use crate::protocol::{ReconfigCommand, SubstituteSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelevancePolicy {
    /// Largest mean absolute deviation that still counts as agreement.
    pub agreement_tolerance: f64,
    pub comparison_window_ticks: usize,
    pub relaxed_interval_seconds: u32,
    pub eager_interval_seconds: u32,
    /// Consecutive identical verdicts needed before the issued command
    /// changes.
    pub hysteresis_windows: u32,
}

impl Default for RelevancePolicy {
    fn default() -> Self {
        Self {
            agreement_tolerance: 1.0,
            comparison_window_ticks: 12,
            relaxed_interval_seconds: 1800,
            eager_interval_seconds: 60,
            hysteresis_windows: 2,
        }
    }
}

impl RelevancePolicy {
    pub fn validate(&self) -> Result<(), RuleError> {
        let bad = |m: &str| Err(RuleError::InvalidPolicy(m.into()));
        if !(self.agreement_tolerance.is_finite() && self.agreement_tolerance > 0.0) {
            return bad("agreement_tolerance must be positive");
        }
        if self.comparison_window_ticks == 0 {
            return bad("comparison_window_ticks must be positive");
        }
        if self.eager_interval_seconds == 0 || self.relaxed_interval_seconds <= self.eager_interval_seconds {
            return bad("relaxed interval must exceed a positive eager interval");
        }
        if self.hysteresis_windows == 0 {
            return bad("hysteresis_windows must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelevanceVerdict {
    pub agrees: bool,
    pub mean_abs_deviation: f64,
    pub window_ticks_compared: usize,
}

fn points(series: &Series) -> Vec<(i64, f64)> {
    let spacing = series.tick_seconds as i64;
    series.values.iter().enumerate().map(|(i, v)| ((series.start_tick + i as i64) * spacing, *v)).collect()
}

/// Compares a node window with a reference window.
///
/// Each node sample is paired with the reference sample nearest in time
/// (the earlier one on a tie). Node samples more than half a reference
/// spacing outside the reference span are not compared.
pub fn assess_relevance(
    node_window: &Series,
    reference_window: &Series,
    policy: &RelevancePolicy,
) -> Result<RelevanceVerdict, RuleError> {
    if node_window.tick_seconds == 0 || reference_window.tick_seconds == 0 {
        return Err(RuleError::EmptyWindow);
    }
    assess_points(&points(node_window), &points(reference_window), reference_window.tick_seconds, policy)
}

/// Same comparison for timestamped samples, times in seconds.
///
/// `reference` must be strictly increasing in time. `reference_spacing` is
/// the nominal reference cadence and only decides how far past either end
/// of the reference a node sample may lie and still be compared.
pub fn assess_points(
    node: &[(i64, f64)],
    reference: &[(i64, f64)],
    reference_spacing: u32,
    policy: &RelevancePolicy,
) -> Result<RelevanceVerdict, RuleError> {
    if node.is_empty() || reference.is_empty() || reference_spacing == 0 {
        return Err(RuleError::EmptyWindow);
    }
    if node.iter().chain(reference).any(|(_, v)| !v.is_finite()) {
        return Err(RuleError::NonFinite);
    }
    if reference.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(RuleError::Unordered);
    }

    let spacing = reference_spacing as i64;
    let first = reference[0].0;
    let last = reference[reference.len() - 1].0;
    let mut total = 0.0;
    let mut compared = 0usize;
    for &(t, v) in node {
        // doubled times keep the half-spacing reach exact in integers
        if 2 * t <= 2 * first - spacing || 2 * t > 2 * last + spacing {
            continue;
        }
        let after = reference.partition_point(|(rt, _)| *rt < t);
        let j = if after == 0 {
            0
        } else if after == reference.len() {
            after - 1
        } else if reference[after].0 - t < t - reference[after - 1].0 {
            after
        } else {
            after - 1
        };
        total += (v - reference[j].1).abs();
        compared += 1;
    }
    if compared == 0 {
        return Err(RuleError::NoOverlap);
    }
    let mean_abs_deviation = total / compared as f64;
    Ok(RelevanceVerdict {
        agrees: mean_abs_deviation <= policy.agreement_tolerance,
        mean_abs_deviation,
        window_ticks_compared: compared,
    })
}

/// Agreement relaxes sampling and lets the reference stand in for the node;
/// disagreement asks for the eager interval and stops substitution.
pub fn decide_reconfiguration(verdict: &RelevanceVerdict, policy: &RelevancePolicy, sensor_id: &str) -> ReconfigCommand {
    if verdict.agrees {
        ReconfigCommand::new(sensor_id)
            .with_interval(policy.relaxed_interval_seconds)
            .with_substitute(SubstituteSource::WeatherForecast)
    } else {
        ReconfigCommand::new(sensor_id)
            .with_interval(policy.eager_interval_seconds)
            .with_substitute(SubstituteSource::None)
    }
}

/// Debounces verdicts: the committed decision only changes after
/// `required` consecutive verdicts point the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hysteresis {
    required: u32,
    candidate: Option<bool>,
    streak: u32,
    committed: Option<bool>,
}

impl Hysteresis {
    pub fn new(required: u32) -> Self {
        Self { required: required.max(1), candidate: None, streak: 0, committed: None }
    }

    pub fn committed(&self) -> Option<bool> {
        self.committed
    }

    /// Commits a decision outright, e.g. when the reference is unavailable.
    pub fn force(&mut self, agrees: bool) {
        self.candidate = Some(agrees);
        self.streak = self.required;
        self.committed = Some(agrees);
    }

    /// Returns the new decision when this verdict changes it.
    pub fn observe(&mut self, agrees: bool) -> Option<bool> {
        if self.candidate == Some(agrees) {
            self.streak += 1;
        } else {
            self.candidate = Some(agrees);
            self.streak = 1;
        }
        if self.streak >= self.required && self.committed != Some(agrees) {
            self.committed = Some(agrees);
            return Some(agrees);
        }
        None
    }
}
