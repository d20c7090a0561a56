//! Data relevance rules: what sampling interval a node should use.
//!
//! Two kinds of rule produce reconfiguration suggestions. A
//! [`ScheduleRule`] maps the time of day to an interval. The weather
//! agreement rule compares a node's recent readings with an external
//! reference; when they agree the node can sample rarely and the reference
//! stands in for it, otherwise the node samples as often as it can.

mod relevance;
mod schedule;

pub use relevance::{
    assess_points, assess_relevance, decide_reconfiguration, Hysteresis, RelevancePolicy, RelevanceVerdict,
};
pub use schedule::{evaluate_schedule, ScheduleRule, ScheduleSegment};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("invalid schedule rule: {0}")]
    InvalidSchedule(String),
    #[error("invalid relevance policy: {0}")]
    InvalidPolicy(String),
    #[error("windows do not overlap")]
    NoOverlap,
    #[error("reference samples are not strictly increasing in time")]
    Unordered,
    #[error("window is empty")]
    EmptyWindow,
    #[error("non-finite value in window")]
    NonFinite,
}
