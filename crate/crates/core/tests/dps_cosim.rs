//! Node and sink driven tick by tick against each other.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sensorloop_core::dps::{run_lockstep, DpsConfig, DpsNodeState, DpsSinkState, ModelUpdateMsg, Phase};
use sensorloop_core::forecast::ArimaOrder;

fn daily_trace(n: usize, seconds_per_tick: f64, noise_std: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_std).unwrap();
    (0..n)
        .map(|i| {
            let t = i as f64 * seconds_per_tick;
            20.0 + 4.0 * (2.0 * std::f64::consts::PI * t / 86_400.0).sin() + noise.sample(&mut rng)
        })
        .collect()
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Hand-rolled lockstep loop, kept separate from `run_lockstep` so the two
/// check each other. Returns per-tick (measurement, reconstructed,
/// transmitted).
fn cosimulate(
    values: &[f64],
    config: &DpsConfig,
    mut inject: impl FnMut(u64) -> Option<ModelUpdateMsg>,
) -> Vec<(f64, f64, bool)> {
    let mut node = DpsNodeState::new();
    let mut sink = DpsSinkState::new(config);
    let mut out = Vec::new();
    for &m in values {
        let d = node.step(m, config).unwrap();
        let r = sink.step(d.value_sent, config).unwrap();
        assert_eq!(bits(&node.shared_history.values), bits(&sink.reconstruction.values), "tick {}", node.tick);
        assert_eq!(node.tick, sink.tick);
        if let Some(msg) = sink.maybe_refresh_model(config) {
            node.apply_model_update(&msg).unwrap();
        }
        if let Some(msg) = inject(sink.tick) {
            sink.adopt_model(&msg).unwrap();
            node.apply_model_update(&msg).unwrap();
        }
        assert_eq!(node.phase, sink.phase);
        out.push((m, r, d.transmitted));
    }
    out
}

fn assert_error_bound(log: &[(f64, f64, bool)], eps: f64) {
    for (t, &(m, r, tx)) in log.iter().enumerate() {
        if tx {
            assert_eq!(m.to_bits(), r.to_bits(), "tick {t}: transmitted value not reconstructed exactly");
        } else {
            assert!((m - r).abs() <= eps, "tick {t}: |{m} - {r}| > {eps}");
        }
    }
}

#[test]
fn five_hundred_tick_lockstep() {
    let config = DpsConfig::default();
    let values = daily_trace(500, 60.0, 0.1, 1);
    let log = cosimulate(&values, &config, |_| None);
    assert_error_bound(&log, config.threshold_epsilon);
    let suppressed = log.iter().filter(|r| !r.2).count();
    assert!(suppressed > 300, "only {suppressed} suppressions");

    let run = run_lockstep(&values, &config).unwrap();
    let via_helper: Vec<(f64, f64, bool)> =
        run.records.iter().map(|r| (r.measurement, r.reconstructed, r.transmitted)).collect();
    assert_eq!(via_helper.len(), log.len());
    for (a, b) in via_helper.iter().zip(&log) {
        assert_eq!((a.0.to_bits(), a.1.to_bits(), a.2), (b.0.to_bits(), b.1.to_bits(), b.2));
    }
    let updates: Vec<u64> = run.records.iter().filter(|r| r.model_update).map(|r| r.tick).collect();
    assert_eq!(updates, vec![60, 180, 300, 420]);
}

#[test]
fn mid_run_model_swap_keeps_the_bound() {
    let config = DpsConfig { refresh_interval_ticks: 10_000, ..DpsConfig::default() };
    let values = daily_trace(500, 60.0, 0.2, 2);
    let swap = |tick: u64| {
        (tick == 250).then(|| ModelUpdateMsg {
            order: ArimaOrder::new(1, 1, 0),
            ar_coeffs: vec![0.3],
            ma_coeffs: vec![],
            intercept: 0.0,
            noise_variance: 0.04,
            origin_tick: tick,
        })
    };
    let log = cosimulate(&values, &config, swap);
    assert_error_bound(&log, config.threshold_epsilon);
}

#[test]
fn update_then_forecast_agrees_on_both_sides() {
    let config = DpsConfig::default();
    let values = daily_trace(61, 60.0, 0.1, 3);
    let mut node = DpsNodeState::new();
    let mut sink = DpsSinkState::new(&config);
    for &m in &values[..60] {
        let d = node.step(m, &config).unwrap();
        sink.step(d.value_sent, &config).unwrap();
    }
    let msg = sink.maybe_refresh_model(&config).unwrap();
    node.apply_model_update(&msg).unwrap();
    assert_eq!(node.phase, Phase::Predicting);
    let a = node.expected_next(&config).unwrap();
    let b = sink.expected_next(&config).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn constant_signal_is_silent_after_init() {
    let config = DpsConfig::default();
    let run = run_lockstep(&[21.5; 400], &config).unwrap();
    let tx_after_init = run.records.iter().filter(|r| r.phase == Phase::Predicting && r.transmitted).count();
    assert_eq!(tx_after_init, 0);
    assert_eq!(run.records.iter().filter(|r| r.transmitted).count(), 60);
}

#[test]
fn zero_threshold_transmits_everything_on_noise() {
    let config = DpsConfig { threshold_epsilon: 0.0, ..DpsConfig::default() };
    let run = run_lockstep(&daily_trace(300, 60.0, 0.3, 4), &config).unwrap();
    assert!(run.records.iter().all(|r| r.transmitted));
}

/// Plain deadband (random-walk forecast) run, returning transmissions.
fn deadband_transmissions(trace: &[f64], eps: f64) -> usize {
    let config = DpsConfig {
        threshold_epsilon: eps,
        init_phase_ticks: 31,
        refresh_interval_ticks: 1_000_000,
        ..DpsConfig::default()
    };
    let mut node = DpsNodeState::new();
    let mut sink = DpsSinkState::new(&config);
    let mut padded = vec![trace[0]; 30];
    padded.extend_from_slice(trace);
    let mut count = 0;
    for (i, &m) in padded.iter().enumerate() {
        let d = node.step(m, &config).unwrap();
        sink.step(d.value_sent, &config).unwrap();
        if i == 30 {
            let msg = ModelUpdateMsg {
                order: ArimaOrder::new(0, 1, 0),
                ar_coeffs: vec![],
                ma_coeffs: vec![],
                intercept: 0.0,
                noise_variance: 0.0,
                origin_tick: node.tick,
            };
            sink.adopt_model(&msg).unwrap();
            node.apply_model_update(&msg).unwrap();
        } else if i > 30 && d.transmitted {
            count += 1;
        }
    }
    count
}

#[test]
fn larger_threshold_can_transmit_more_on_a_single_trace() {
    // A wider deadband can postpone a reset so that later readings all miss.
    let trace = [1.0, 0.5, -1.5, -3.0, -2.2, -0.4];
    assert_eq!(deadband_transmissions(&trace, 1.9), 1);
    assert_eq!(deadband_transmissions(&trace, 2.5), 2);
}

#[test]
fn transmissions_fall_along_threshold_ladder_in_aggregate() {
    let ladder = [0.1, 0.25, 0.5, 1.0, 2.0];
    let traces: Vec<Vec<f64>> = (0..4).map(|s| daily_trace(600, 60.0, 0.1, 10 + s)).collect();
    let totals: Vec<usize> = ladder
        .iter()
        .map(|&eps| {
            let config = DpsConfig { threshold_epsilon: eps, ..DpsConfig::default() };
            traces
                .iter()
                .map(|t| run_lockstep(t, &config).unwrap().records.iter().filter(|r| r.transmitted).count())
                .sum()
        })
        .collect();
    for pair in totals.windows(2) {
        assert!(pair[1] <= pair[0], "{totals:?}");
    }
}

#[test]
fn replayed_run_is_identical() {
    let values = daily_trace(400, 60.0, 0.1, 5);
    let config = DpsConfig::default();
    let a = run_lockstep(&values, &config).unwrap();
    let b = run_lockstep(&values, &config).unwrap();
    assert_eq!(a.records, b.records);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn error_bound_and_synchrony_hold(seed in 0u64..1_000_000, eps in 0.05f64..2.0, noise in 0.0f64..0.8) {
        let config = DpsConfig { threshold_epsilon: eps, ..DpsConfig::default() };
        let values = daily_trace(300, 120.0, noise, seed);
        let log = cosimulate(&values, &config, |_| None);
        assert_error_bound(&log, eps);
    }
}
