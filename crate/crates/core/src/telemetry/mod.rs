//! Field telemetry: simulated sensor nodes, the `AG1` line protocol, an
//! append-only reading store with rule-engine alerting, and a line-stream
//! ingestion service.

pub mod alert;
pub mod node;
pub mod protocol;
pub mod service;
pub mod store;

pub use alert::{Alert, AlertSink, AlertSource, JsonLinesSink, MemorySink};
pub use node::{node_poll, soil_from_resistance, EnvironmentModel, NodeError, NodeState, Simulation};
pub use protocol::{encode_reading, parse_reading, WireError};
pub use service::{ingest_stream, serve_tcp, IngestStats};
pub use store::{ingest, IngestError, IngestOutcome, Ingestor, RuleConfig, StoreError, TelemetryStore};
