//! Append-only per-node reading streams, optionally persisted as
//! `<data_dir>/<node_id>.jsonl`, and the ingestion step that feeds the rule
//! engine.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::alert::{Alert, AlertSink};
use super::protocol::{parse_reading, WireError};
use crate::agronomy::{assess, AgronomyError, GrowthStage, NodeId, SensorReading, SoilBand};

pub const DEFAULT_CAPACITY: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store is full ({0} readings)")]
    StoreFull(usize),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("window start {t0} is after end {t1}")]
    BadWindow { t0: u64, t1: u64 },
    #[error("store file {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("store file {path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug)]
pub struct TelemetryStore {
    data_dir: Option<PathBuf>,
    capacity: usize,
    len: usize,
    streams: BTreeMap<NodeId, Vec<SensorReading>>,
}

impl TelemetryStore {
    pub fn in_memory(capacity: usize) -> Self {
        Self {
            data_dir: None,
            capacity,
            len: 0,
            streams: BTreeMap::new(),
        }
    }

    /// Opens (creating if needed) a persistent store and replays any
    /// existing node files.
    pub fn open(dir: &Path, capacity: usize) -> Result<Self, StoreError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| StoreError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut store = Self::in_memory(capacity);
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        for path in files {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
                let reading: SensorReading = serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
                    path: path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                store.insert(reading)?;
            }
        }
        store.data_dir = Some(dir.to_path_buf());
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.streams.keys()
    }

    pub fn readings(&self, node: &NodeId) -> Option<&[SensorReading]> {
        self.streams.get(node).map(Vec::as_slice)
    }

    fn insert(&mut self, reading: SensorReading) -> Result<bool, StoreError> {
        let stream = self.streams.get(&reading.node_id);
        // Replays and late retransmissions both carry a seq we have already
        // moved past; keeping seq strictly increasing drops them.
        if stream
            .and_then(|s| s.last())
            .is_some_and(|last| reading.seq <= last.seq)
        {
            return Ok(false);
        }
        if self.len >= self.capacity {
            return Err(StoreError::StoreFull(self.capacity));
        }
        self.streams.entry(reading.node_id.clone()).or_default().push(reading);
        self.len += 1;
        Ok(true)
    }

    /// Appends the reading to its node's stream. Returns `false` (and
    /// changes nothing) when `(node_id, seq)` is not newer than the stream.
    pub fn append(&mut self, reading: SensorReading) -> Result<bool, StoreError> {
        let line = serde_json::to_string(&reading).expect("reading serialises");
        let path = self
            .data_dir
            .as_ref()
            .map(|d| d.join(format!("{}.jsonl", reading.node_id)));
        if !self.insert(reading)? {
            return Ok(false);
        }
        if let Some(path) = path {
            let write = || -> io::Result<()> {
                let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
                writeln!(f, "{line}")
            };
            write().map_err(|source| StoreError::Io { path, source })?;
        }
        Ok(true)
    }

    /// Readings with `t0 <= ts <= t1`, in ingestion order.
    pub fn query_window(&self, node: &NodeId, t0: u64, t1: u64) -> Result<Vec<SensorReading>, StoreError> {
        if t0 > t1 {
            return Err(StoreError::BadWindow { t0, t1 });
        }
        let stream = self
            .streams
            .get(node)
            .ok_or_else(|| StoreError::UnknownNode(node.to_string()))?;
        Ok(stream
            .iter()
            .filter(|r| (t0..=t1).contains(&r.timestamp_ms))
            .cloned()
            .collect())
    }
}

/// Rule-engine settings applied at ingestion time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConfig {
    pub stage: GrowthStage,
    pub soil_band: SoilBand,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("parse error: {0}")]
    Parse(#[from] WireError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Rules(#[from] AgronomyError),
    #[error("alert sink: {0}")]
    Sink(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutcome {
    pub reading: SensorReading,
    /// False for a dropped replay.
    pub appended: bool,
    pub alert: Option<Alert>,
}

/// Parses one wire line, appends it, runs the rule engine and forwards a
/// Warn/Critical verdict to the alert sink. Replays are dropped before the
/// rule engine runs, so they never raise a second alert.
pub fn ingest(
    store: &mut TelemetryStore,
    line: &str,
    rules: &RuleConfig,
    sink: &mut dyn AlertSink,
) -> Result<IngestOutcome, IngestError> {
    let reading = parse_reading(line)?;
    rules.soil_band.validate()?;
    if !store.append(reading.clone())? {
        return Ok(IngestOutcome {
            reading,
            appended: false,
            alert: None,
        });
    }
    let advisories = assess(&reading, rules.stage, &rules.soil_band)?;
    let reference = format!("{}/{}", reading.node_id, reading.seq);
    let alert = Alert::from_advisories(reading.timestamp_ms, reference, &advisories);
    if let Some(a) = &alert {
        sink.emit(a)?;
    }
    Ok(IngestOutcome {
        reading,
        appended: true,
        alert,
    })
}

/// Store, rules and sink bundled for the single ingestion writer. The store
/// is shared so that queries can run from other threads; each ingested line
/// takes the write lock once, so readers always see a whole prefix.
pub struct Ingestor<S: AlertSink> {
    store: Arc<RwLock<TelemetryStore>>,
    pub rules: RuleConfig,
    pub sink: S,
}

impl<S: AlertSink> Ingestor<S> {
    pub fn new(store: TelemetryStore, rules: RuleConfig, sink: S) -> Self {
        Self {
            store: Arc::new(RwLock::new(store)),
            rules,
            sink,
        }
    }

    pub fn store(&self) -> Arc<RwLock<TelemetryStore>> {
        Arc::clone(&self.store)
    }

    pub fn len(&self) -> usize {
        self.store.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ingest(&mut self, line: &str) -> Result<IngestOutcome, IngestError> {
        let mut store = self.store.write().expect("store lock");
        ingest(&mut store, line, &self.rules, &mut self.sink)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agronomy::Severity;
    use crate::telemetry::{encode_reading, MemorySink};

    fn line(seq: u32, ts: u64, t: &str) -> String {
        format!("AG1 n07 {seq} {ts} {t} 82.00 45.00\n")
    }

    #[test]
    fn duplicate_is_dropped() {
        let mut ing = Ingestor::new(
            TelemetryStore::in_memory(10),
            RuleConfig::default(),
            MemorySink::default(),
        );
        assert!(ing.ingest(&line(1, 1000, "31.00")).unwrap().appended);
        let again = ing.ingest(&line(1, 1000, "31.00")).unwrap();
        assert!(!again.appended);
        assert_eq!(ing.len(), 1);
        assert!(ing.sink.alerts.is_empty());
    }

    #[test]
    fn hot_growth_reading_alerts_once() {
        let mut ing = Ingestor::new(
            TelemetryStore::in_memory(10),
            RuleConfig::default(),
            MemorySink::default(),
        );
        let out = ing.ingest(&line(1, 1000, "39.00")).unwrap();
        assert_eq!(out.alert.as_ref().unwrap().severity, Severity::Critical);
        ing.ingest(&line(1, 1000, "39.00")).unwrap();
        assert_eq!(ing.sink.alerts.len(), 1);
        assert_eq!(ing.sink.alerts[0].reference, "n07/1");
    }

    #[test]
    fn parse_errors_propagate_and_capacity_is_enforced() {
        let mut ing = Ingestor::new(
            TelemetryStore::in_memory(1),
            RuleConfig::default(),
            MemorySink::default(),
        );
        assert!(matches!(
            ing.ingest("AG1 n07 1"),
            Err(IngestError::Parse(WireError::FieldCount(3)))
        ));
        ing.ingest(&line(1, 1000, "31.00")).unwrap();
        assert!(matches!(
            ing.ingest(&line(2, 2000, "31.00")),
            Err(IngestError::Store(StoreError::StoreFull(1)))
        ));
    }

    #[test]
    fn window_queries() {
        let mut store = TelemetryStore::in_memory(100);
        let mut sink = MemorySink::default();
        for i in 1..=5u32 {
            ingest(
                &mut store,
                &line(i, i as u64 * 1000, "31.00"),
                &RuleConfig::default(),
                &mut sink,
            )
            .unwrap();
        }
        let id = NodeId::new("n07").unwrap();
        assert_eq!(store.query_window(&id, 2000, 4000).unwrap().len(), 3);
        assert!(store.query_window(&id, 6000, 9000).unwrap().is_empty());
        assert_eq!(store.query_window(&id, 0, u64::MAX).unwrap().len(), 5);
        assert!(matches!(
            store.query_window(&id, 5, 4),
            Err(StoreError::BadWindow { .. })
        ));
        let other = NodeId::new("zz").unwrap();
        assert!(matches!(
            store.query_window(&other, 0, 1),
            Err(StoreError::UnknownNode(_))
        ));
    }

    #[test]
    fn persistent_store_replays_files() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        {
            let mut store = TelemetryStore::open(&data, 100).unwrap();
            let mut sink = MemorySink::default();
            for i in 1..=3u32 {
                ingest(
                    &mut store,
                    &line(i, i as u64 * 1000, "31.00"),
                    &RuleConfig::default(),
                    &mut sink,
                )
                .unwrap();
            }
        }
        let text = fs::read_to_string(data.join("n07.jsonl")).unwrap();
        assert_eq!(text.lines().count(), 3);
        let mut store = TelemetryStore::open(&data, 100).unwrap();
        assert_eq!(store.len(), 3);
        let r = parse_reading(&line(2, 2000, "31.00")).unwrap();
        assert!(!store.append(r).unwrap());
        let r = parse_reading(&line(4, 4000, "31.00")).unwrap();
        assert_eq!(encode_reading(&r).unwrap(), line(4, 4000, "31.00"));
        assert!(store.append(r).unwrap());
        assert_eq!(fs::read_to_string(data.join("n07.jsonl")).unwrap().lines().count(), 4);
    }
}
