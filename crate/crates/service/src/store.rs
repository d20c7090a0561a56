//! Append-only measurement store.
//!
//! Each sensor gets one newline-delimited JSON file under `<dir>/series/`.
//! Every line is a [`StoredMeasurement`]. The files are only ever appended
//! to; an in-memory index keyed by tick answers range queries. Opening a
//! store replays the files, so a restarted service answers queries exactly
//! as before.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use sensorloop_core::protocol::{Measurement, ProtocolError, StoredMeasurement};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Invalid(#[from] ProtocolError),
    #[error("sensor id {0:?} may only contain ASCII letters, digits, '_', '-' and '.'")]
    InvalidSensorId(String),
    #[error("sensor {sensor_id} already has a measurement at tick {tick}")]
    Duplicate { sensor_id: String, tick: i64 },
    #[error("empty range: from {from} is after to {to}")]
    InvalidRange { from: i64, to: i64 },
    #[error("corrupt record in {path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Sensor ids double as file names, so they are kept to a safe alphabet.
pub fn check_sensor_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id.len() <= 128
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidSensorId(id.to_string()))
    }
}

struct SensorLog {
    file: File,
    index: BTreeMap<i64, StoredMeasurement>,
}

pub struct Store {
    dir: PathBuf,
    logs: RwLock<HashMap<String, Arc<Mutex<SensorLog>>>>,
    next_seq: AtomicU64,
}

impl Store {
    /// Opens (or creates) a store rooted at `dir` and replays its logs.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().join("series");
        fs::create_dir_all(&dir)?;
        let mut logs = HashMap::new();
        let mut max_seq = 0;
        let mut entries: Vec<_> = fs::read_dir(&dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let path = entry.path();
            let Some(sensor_id) = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".ndjson"))
                .map(str::to_string)
            else {
                continue;
            };
            let index = replay(&path)?;
            max_seq = index.values().map(|m| m.seq).fold(max_seq, u64::max);
            let file = OpenOptions::new().append(true).open(&path)?;
            logs.insert(sensor_id, Arc::new(Mutex::new(SensorLog { file, index })));
        }
        Ok(Self { dir, logs: RwLock::new(logs), next_seq: AtomicU64::new(max_seq + 1) })
    }

    fn log(&self, sensor_id: &str, create: bool) -> Result<Option<Arc<Mutex<SensorLog>>>, StoreError> {
        if let Some(log) = self.logs.read().unwrap().get(sensor_id) {
            return Ok(Some(log.clone()));
        }
        if !create {
            return Ok(None);
        }
        let mut logs = self.logs.write().unwrap();
        if let Some(log) = logs.get(sensor_id) {
            return Ok(Some(log.clone()));
        }
        let path = self.dir.join(format!("{sensor_id}.ndjson"));
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let log = Arc::new(Mutex::new(SensorLog { file, index: BTreeMap::new() }));
        logs.insert(sensor_id.to_string(), log.clone());
        Ok(Some(log))
    }

    /// Appends a measurement and returns it with its sequence number.
    pub fn append(&self, measurement: Measurement) -> Result<StoredMeasurement, StoreError> {
        measurement.validate()?;
        check_sensor_id(&measurement.sensor_id)?;
        let log = self.log(&measurement.sensor_id, true)?.expect("created on demand");
        let mut log = log.lock().unwrap();
        if log.index.contains_key(&measurement.tick) {
            return Err(StoreError::Duplicate { sensor_id: measurement.sensor_id, tick: measurement.tick });
        }
        let stored = StoredMeasurement { seq: self.next_seq.fetch_add(1, Ordering::SeqCst), measurement };
        let mut line = serde_json::to_vec(&stored).map_err(io::Error::other)?;
        line.push(b'\n');
        log.file.write_all(&line)?;
        log.index.insert(stored.measurement.tick, stored.clone());
        Ok(stored)
    }

    pub fn contains(&self, sensor_id: &str, tick: i64) -> bool {
        match self.log(sensor_id, false) {
            Ok(Some(log)) => log.lock().unwrap().index.contains_key(&tick),
            _ => false,
        }
    }

    /// Stored measurements with `from <= tick <= to`, in tick order. An
    /// unknown sensor yields an empty result.
    pub fn query(&self, sensor_id: &str, from: i64, to: i64) -> Result<Vec<StoredMeasurement>, StoreError> {
        if from > to {
            return Err(StoreError::InvalidRange { from, to });
        }
        Ok(match self.log(sensor_id, false)? {
            Some(log) => log.lock().unwrap().index.range(from..=to).map(|(_, m)| m.clone()).collect(),
            None => Vec::new(),
        })
    }

    pub fn len(&self, sensor_id: &str) -> usize {
        match self.log(sensor_id, false) {
            Ok(Some(log)) => log.lock().unwrap().index.len(),
            _ => 0,
        }
    }

    pub fn total_len(&self) -> usize {
        let logs = self.logs.read().unwrap();
        logs.values().map(|l| l.lock().unwrap().index.len()).sum()
    }

    pub fn sensors(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.logs.read().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }
}

/// Rebuilds the index of one log. An unterminated final line (a crash
/// mid-write, never acknowledged) is cut off so later appends start on a clean line.
fn replay(path: &Path) -> Result<BTreeMap<i64, StoredMeasurement>, StoreError> {
    let bytes = fs::read(path)?;
    let mut index = BTreeMap::new();
    let mut offset = 0;
    for (i, line) in bytes.split_inclusive(|b| *b == b'\n').enumerate() {
        let complete = line.ends_with(b"\n");
        let body = line.strip_suffix(b"\n").unwrap_or(line);
        let corrupt = |message: String| StoreError::Corrupt { path: path.to_path_buf(), line: i + 1, message };
        if !complete {
            tracing::warn!(path = %path.display(), line = i + 1, "dropping truncated trailing record");
            OpenOptions::new().write(true).open(path)?.set_len(offset as u64)?;
            break;
        }
        if !body.is_empty() {
            let m: StoredMeasurement = serde_json::from_slice(body).map_err(|e| corrupt(e.to_string()))?;
            if index.insert(m.measurement.tick, m).is_some() {
                return Err(corrupt("duplicate tick".into()));
            }
        }
        offset += line.len();
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use sensorloop_core::protocol::Provenance;

    fn m(sensor: &str, tick: i64, value: f64) -> Measurement {
        Measurement {
            sensor_id: sensor.into(),
            tick,
            wallclock: Utc.timestamp_opt(1_465_290_000 + tick, 0).unwrap(),
            value,
            unit: "C".into(),
            provenance: Provenance::Sensed,
        }
    }

    #[test]
    fn sensor_id_alphabet() {
        assert!(check_sensor_id("node-1.a_b").is_ok());
        for bad in ["", ".", "..", "a/b", "a b", "ñ"] {
            assert!(check_sensor_id(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn truncated_tail_is_dropped_on_reopen() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = Store::open(dir.path()).unwrap();
            store.append(m("n1", 0, 1.0)).unwrap();
            store.append(m("n1", 60, 2.0)).unwrap();
        }
        let path = dir.path().join("series/n1.ndjson");
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(br#"{"seq":3,"sensor_id":"n1","ti"#).unwrap();
        drop(f);
        let store = Store::open(dir.path()).unwrap();
        assert_eq!(store.len("n1"), 2);
        store.append(m("n1", 120, 3.0)).unwrap();
        drop(store);
        let store = Store::open(dir.path()).unwrap();
        assert_eq!(store.len("n1"), 3);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("series")).unwrap();
        fs::write(dir.path().join("series/n1.ndjson"), "garbage\n{}\n").unwrap();
        assert!(matches!(Store::open(dir.path()), Err(StoreError::Corrupt { line: 1, .. })));
    }

    #[test]
    fn range_queries() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        for t in [0, 60, 120, 180] {
            store.append(m("n1", t, t as f64)).unwrap();
        }
        let ticks = |v: Vec<StoredMeasurement>| v.into_iter().map(|s| s.measurement.tick).collect::<Vec<_>>();
        assert_eq!(ticks(store.query("n1", 30, 150).unwrap()), vec![60, 120]);
        assert!(store.query("n1", 61, 119).unwrap().is_empty());
        assert!(store.query("nobody", 0, 100).unwrap().is_empty());
        assert!(matches!(store.query("n1", 5, 4), Err(StoreError::InvalidRange { .. })));
    }
}
