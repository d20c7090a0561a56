use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use sensorloop_core::protocol::FailureRecord;

/// Reported failures, appended to `failures.ndjson` and replayed on start.
pub(super) struct FailureLog {
    file: File,
    records: Vec<FailureRecord>,
}

impl FailureLog {
    pub fn open(dir: &Path) -> io::Result<Self> {
        let path = dir.join("failures.ndjson");
        let mut records = Vec::new();
        if path.exists() {
            let text = fs::read_to_string(&path)?;
            let mut good = 0;
            for line in text.split_inclusive('\n') {
                if !line.ends_with('\n') {
                    // unterminated tail from an interrupted write
                    OpenOptions::new().write(true).open(&path)?.set_len(good as u64)?;
                    break;
                }
                if !line.trim().is_empty() {
                    let record = serde_json::from_str(line.trim_end()).map_err(io::Error::other)?;
                    records.push(record);
                }
                good += line.len();
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { file, records })
    }

    pub fn next_seq(&self) -> u64 {
        self.records.last().map_or(1, |r| r.seq + 1)
    }

    pub fn append(&mut self, record: FailureRecord) -> io::Result<()> {
        let mut line = serde_json::to_vec(&record).map_err(io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[FailureRecord] {
        &self.records
    }
}
