use chrono::{DateTime, Datelike, NaiveTime, Timelike, Utc, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::RuleError;

/// Interval applied inside a time-of-day window `[start, end)`. A window
/// whose end is not after its start wraps past midnight; equal bounds cover
/// the whole day. `days` restricts the window to some weekdays (of the
/// timestamp's own date).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    #[serde(with = "hhmm")]
    pub start: NaiveTime,
    #[serde(with = "hhmm")]
    pub end: NaiveTime,
    pub interval_seconds: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub days: Option<Vec<Weekday>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRule {
    pub segments: Vec<ScheduleSegment>,
    pub default_interval_seconds: u32,
    /// How often the dashboard re-evaluates the rule.
    #[serde(default = "default_evaluation_period")]
    pub evaluation_period_seconds: u32,
}

fn default_evaluation_period() -> u32 {
    720
}

fn seconds_of_day(t: NaiveTime) -> u32 {
    t.num_seconds_from_midnight()
}

impl ScheduleSegment {
    /// Second-of-day ranges `[a, b)` covered by the window.
    fn ranges(&self) -> Vec<(u32, u32)> {
        let (s, e) = (seconds_of_day(self.start), seconds_of_day(self.end));
        match s.cmp(&e) {
            std::cmp::Ordering::Less => vec![(s, e)],
            std::cmp::Ordering::Equal => vec![(0, 86_400)],
            std::cmp::Ordering::Greater => vec![(s, 86_400), (0, e)],
        }
    }

    fn on_day(&self, day: Weekday) -> bool {
        match &self.days {
            Some(days) => days.contains(&day),
            None => true,
        }
    }

    pub fn contains(&self, wallclock: DateTime<Utc>) -> bool {
        let sod = wallclock.num_seconds_from_midnight();
        self.on_day(wallclock.weekday()) && self.ranges().iter().any(|&(a, b)| a <= sod && sod < b)
    }

    fn overlaps(&self, other: &ScheduleSegment) -> bool {
        let shared_day = match (&self.days, &other.days) {
            (Some(a), Some(b)) => a.iter().any(|d| b.contains(d)),
            _ => true,
        };
        shared_day
            && self
                .ranges()
                .iter()
                .any(|&(a, b)| other.ranges().iter().any(|&(c, d)| a < d && c < b))
    }
}

impl ScheduleRule {
    pub fn validate(&self) -> Result<(), RuleError> {
        let bad = |m: String| Err(RuleError::InvalidSchedule(m));
        if self.default_interval_seconds == 0 || self.evaluation_period_seconds == 0 {
            return bad("default interval and evaluation period must be positive".into());
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.interval_seconds == 0 {
                return bad(format!("segment {i} has a zero interval"));
            }
            if let Some(j) = self.segments[..i].iter().position(|other| other.overlaps(seg)) {
                return bad(format!("segments {j} and {i} overlap"));
            }
        }
        Ok(())
    }
}

/// Interval in force at `wallclock`: the containing segment's, else the
/// rule default.
pub fn evaluate_schedule(rule: &ScheduleRule, wallclock: DateTime<Utc>) -> u32 {
    rule.segments
        .iter()
        .find(|s| s.contains(wallclock))
        .map_or(rule.default_interval_seconds, |s| s.interval_seconds)
}

mod hhmm {
    use super::*;

    pub fn serialize<S: Serializer>(t: &NaiveTime, s: S) -> Result<S::Ok, S::Error> {
        if t.second() == 0 {
            s.serialize_str(&t.format("%H:%M").to_string())
        } else {
            s.serialize_str(&t.format("%H:%M:%S").to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveTime, D::Error> {
        let raw = String::deserialize(d)?;
        NaiveTime::parse_from_str(&raw, "%H:%M:%S")
            .or_else(|_| NaiveTime::parse_from_str(&raw, "%H:%M"))
            .map_err(serde::de::Error::custom)
    }
}
