use chrono::{DateTime, Duration, NaiveTime, TimeZone, Utc};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sensorloop_core::forecast::Series;
use sensorloop_core::protocol::SubstituteSource;
use sensorloop_core::rules::*;

fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).unwrap()
}

fn segment(a: (u32, u32), b: (u32, u32), interval: u32) -> ScheduleSegment {
    ScheduleSegment { start: hm(a.0, a.1), end: hm(b.0, b.1), interval_seconds: interval, days: None }
}

/// The rule behind the 12-minute demo: 60, 120, 240, 120, 60 seconds.
fn demo_rule() -> ScheduleRule {
    ScheduleRule {
        segments: vec![
            segment((9, 0), (9, 12), 60),
            segment((9, 12), (9, 24), 120),
            segment((9, 24), (9, 36), 240),
            segment((9, 36), (9, 48), 120),
            segment((9, 48), (10, 0), 60),
        ],
        default_interval_seconds: 240,
        evaluation_period_seconds: 720,
    }
}

#[test]
fn demo_rule_over_36_minutes() {
    let rule = demo_rule();
    rule.validate().unwrap();
    let start = Utc.with_ymd_and_hms(2016, 6, 7, 9, 0, 0).unwrap();
    let seen: Vec<u32> = (0..3)
        .map(|k| evaluate_schedule(&rule, start + Duration::seconds(k * rule.evaluation_period_seconds as i64)))
        .collect();
    assert_eq!(seen, vec![60, 120, 240]);
}

#[test]
fn deviation_matches_direct_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let node: Vec<f64> = (0..50).map(|_| rng.gen_range(10.0..30.0)).collect();
    let reference: Vec<f64> = (0..50).map(|_| rng.gen_range(10.0..30.0)).collect();
    let expected = node.iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum::<f64>() / 50.0;
    let v = assess_relevance(
        &Series::with_origin(node, 100, 60),
        &Series::with_origin(reference, 100, 60),
        &RelevancePolicy::default(),
    )
    .unwrap();
    assert_eq!(v.window_ticks_compared, 50);
    assert!((v.mean_abs_deviation - expected).abs() <= 1e-12 * expected);
}

fn arb_wallclock() -> impl Strategy<Value = DateTime<Utc>> {
    (1_400_000_000i64..1_800_000_000).prop_map(|s| Utc.timestamp_opt(s, 0).unwrap())
}

proptest! {
    #[test]
    fn schedule_is_total_and_matches_the_window(t in arb_wallclock()) {
        let rule = demo_rule();
        let got = evaluate_schedule(&rule, t);
        let sod = t.timestamp().rem_euclid(86_400);
        let expected = if (9 * 3600..10 * 3600).contains(&sod) {
            [60, 120, 240, 120, 60][((sod - 9 * 3600) / 720) as usize]
        } else {
            240
        };
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn deviation_is_symmetric_on_shared_ticks(
        a in prop::collection::vec(-50.0f64..50.0, 1..40),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = a.iter().map(|v| v + rng.gen_range(-3.0..3.0)).collect();
        let sa = Series::with_origin(a, 7, 300);
        let sb = Series::with_origin(b, 7, 300);
        let p = RelevancePolicy::default();
        let ab = assess_relevance(&sa, &sb, &p).unwrap();
        let ba = assess_relevance(&sb, &sa, &p).unwrap();
        prop_assert_eq!(ab.mean_abs_deviation, ba.mean_abs_deviation);
        prop_assert_eq!(ab.agrees, ab.mean_abs_deviation <= p.agreement_tolerance);
    }

    #[test]
    fn series_and_points_agree(
        node in prop::collection::vec(0.0f64..10.0, 1..30),
        reference in prop::collection::vec(0.0f64..10.0, 1..10),
        node_start in -20i64..200,
        ref_start in -3i64..3,
    ) {
        let p = RelevancePolicy::default();
        let ns = Series::with_origin(node, node_start, 60);
        let rs = Series::with_origin(reference, ref_start, 3600);
        let as_points = |s: &Series| -> Vec<(i64, f64)> {
            s.values.iter().enumerate()
                .map(|(i, v)| ((s.start_tick + i as i64) * s.tick_seconds as i64, *v))
                .collect()
        };
        prop_assert_eq!(
            assess_relevance(&ns, &rs, &p),
            assess_points(&as_points(&ns), &as_points(&rs), 3600, &p)
        );
    }

    #[test]
    fn commands_follow_the_verdict(agrees in any::<bool>(), dev in 0.0f64..10.0) {
        let p = RelevancePolicy::default();
        let verdict = RelevanceVerdict { agrees, mean_abs_deviation: dev, window_ticks_compared: 12 };
        let c = decide_reconfiguration(&verdict, &p, "n");
        let interval = c.set_interval_seconds.unwrap();
        prop_assert!(interval == p.relaxed_interval_seconds || interval == p.eager_interval_seconds);
        prop_assert_eq!(c.substitute_source == Some(SubstituteSource::WeatherForecast), agrees);
        prop_assert_eq!(decide_reconfiguration(&verdict, &p, "n"), c);
    }
}
