use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use sensorloop_core::protocol::{Measurement, Provenance, StoredMeasurement};
use sensorloop_service::store::{Store, StoreError};

fn m(sensor: &str, tick: i64, value: f64) -> Measurement {
    Measurement {
        sensor_id: sensor.into(),
        tick,
        wallclock: Utc.timestamp_opt(1_465_257_600 + tick, 0).unwrap(),
        value,
        unit: "C".into(),
        provenance: Provenance::Sensed,
    }
}

#[test]
fn duplicate_tick_is_a_conflict_and_stored_once() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    store.append(m("n1", 60, 20.0)).unwrap();
    let err = store.append(m("n1", 60, 21.0)).unwrap_err();
    assert!(matches!(err, StoreError::Duplicate { tick: 60, .. }));
    assert_eq!(store.len("n1"), 1);
    assert_eq!(store.query("n1", 60, 60).unwrap()[0].measurement.value, 20.0);
}

#[test]
fn nan_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    assert!(matches!(store.append(m("n1", 0, f64::NAN)), Err(StoreError::Invalid(_))));
    assert_eq!(store.len("n1"), 0);
}

#[test]
fn sequence_numbers_strictly_increase_across_sensors_and_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let mut seqs = Vec::new();
    {
        let store = Store::open(dir.path()).unwrap();
        for t in 0..50 {
            let sensor = ["a", "b", "c"][t as usize % 3];
            seqs.push(store.append(m(sensor, t, t as f64)).unwrap().seq);
        }
    }
    let store = Store::open(dir.path()).unwrap();
    for t in 50..80 {
        seqs.push(store.append(m("a", t, 0.0)).unwrap().seq);
    }
    assert!(seqs.windows(2).all(|w| w[0] < w[1]), "{seqs:?}");
}

#[test]
fn concurrent_appends_get_distinct_sequence_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let store = std::sync::Arc::new(Store::open(dir.path()).unwrap());
    let handles: Vec<_> = (0..4)
        .map(|k| {
            let store = store.clone();
            std::thread::spawn(move || {
                (0..200).map(|t| store.append(m(&format!("s{k}"), t, 1.0)).unwrap().seq).collect::<Vec<_>>()
            })
        })
        .collect();
    let mut all: Vec<u64> = Vec::new();
    for h in handles {
        let seqs = h.join().unwrap();
        assert!(seqs.windows(2).all(|w| w[0] < w[1]));
        all.extend(seqs);
    }
    all.sort();
    all.dedup();
    assert_eq!(all.len(), 800);
    assert_eq!(store.total_len(), 800);
}

fn all_points(store: &Store) -> Vec<(String, Vec<StoredMeasurement>)> {
    store.sensors().into_iter().map(|s| (s.clone(), store.query(&s, i64::MIN, i64::MAX).unwrap())).collect()
}

#[test]
fn restart_answers_queries_identically() {
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let store = Store::open(dir.path()).unwrap();
        for t in 0..300 {
            let value = (t as f64 * 0.37).sin() * 1e3 + 1.0 / 3.0;
            store.append(m(if t % 2 == 0 { "even" } else { "odd" }, t, value)).unwrap();
        }
        let mut w = m("even", 1000, 12.5);
        w.provenance = Provenance::WeatherForecast;
        store.append(w).unwrap();
        all_points(&store)
    };
    let store = Store::open(dir.path()).unwrap();
    assert_eq!(all_points(&store), before);
    for (sensor, points) in &before {
        assert_eq!(&store.query(sensor, 10, 200).unwrap(), &points.iter().filter(|p| (10..=200).contains(&p.measurement.tick)).cloned().collect::<Vec<_>>());
    }
}

proptest! {
    #[test]
    fn adjacent_ranges_union_to_the_whole(
        ticks in prop::collection::btree_set(-500i64..500, 0..60),
        a in -600i64..600,
        len1 in 0i64..400,
        len2 in 1i64..400,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        for t in &ticks {
            store.append(m("x", *t, *t as f64)).unwrap();
        }
        let b = a + len1;
        let c = b + len2;
        let mut joined = store.query("x", a, b).unwrap();
        joined.extend(store.query("x", b + 1, c).unwrap());
        let whole = store.query("x", a, c).unwrap();
        prop_assert_eq!(&joined, &whole);
        prop_assert!(whole.windows(2).all(|w| w[0].measurement.tick < w[1].measurement.tick));
        let expected: Vec<i64> = ticks.iter().copied().filter(|t| (a..=c).contains(t)).collect();
        prop_assert_eq!(whole.iter().map(|p| p.measurement.tick).collect::<Vec<_>>(), expected);
    }
}
