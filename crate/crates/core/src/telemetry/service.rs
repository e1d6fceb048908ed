//! Newline-delimited ingestion from any reader or from TCP clients. All
//! lines funnel into one writer; per-connection threads only read.

use std::io::{self, BufRead, BufReader};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use serde::Serialize;

use super::alert::AlertSink;
use super::store::{IngestError, Ingestor};

/// How many rejection messages are kept verbatim.
const MAX_ERROR_SAMPLES: usize = 16;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub lines: usize,
    pub appended: usize,
    pub duplicates: usize,
    pub rejected: usize,
    pub alerts: usize,
    pub errors: Vec<String>,
}

impl IngestStats {
    fn record<S: AlertSink>(&mut self, ingestor: &mut Ingestor<S>, line: &str) -> Result<(), IngestError> {
        if line.trim().is_empty() {
            return Ok(());
        }
        self.lines += 1;
        match ingestor.ingest(line) {
            Ok(out) if out.appended => {
                self.appended += 1;
                self.alerts += usize::from(out.alert.is_some());
            }
            Ok(_) => self.duplicates += 1,
            Err(e @ (IngestError::Parse(_) | IngestError::Rules(_))) => {
                self.rejected += 1;
                if self.errors.len() < MAX_ERROR_SAMPLES {
                    self.errors.push(format!("line {}: {e}", self.lines));
                }
            }
            Err(e) => return Err(e),
        }
        Ok(())
    }
}

fn fatal(e: IngestError) -> io::Error {
    match e {
        IngestError::Sink(e) => e,
        other => io::Error::other(other),
    }
}

/// Ingests every line of `reader`. Malformed lines are counted and skipped;
/// a full store or a failing sink stops ingestion with an error.
pub fn ingest_stream<R: BufRead, S: AlertSink>(reader: R, ingestor: &mut Ingestor<S>) -> io::Result<IngestStats> {
    let mut stats = IngestStats::default();
    for line in reader.lines() {
        stats.record(ingestor, &line?).map_err(fatal)?;
    }
    Ok(stats)
}

/// Accepts TCP clients and ingests their lines on the calling thread.
/// Returns once `max_connections` clients have connected and disconnected;
/// with `None` it serves until the listener fails.
pub fn serve_tcp<S: AlertSink>(
    listener: TcpListener,
    ingestor: &mut Ingestor<S>,
    max_connections: Option<usize>,
) -> io::Result<IngestStats> {
    let (tx, rx) = mpsc::channel::<String>();
    let acceptor = thread::spawn(move || -> io::Result<()> {
        let mut accepted = 0usize;
        while max_connections.is_none_or(|m| accepted < m) {
            let (stream, _) = listener.accept()?;
            accepted += 1;
            let tx = tx.clone();
            thread::spawn(move || {
                for line in BufReader::new(stream).lines() {
                    let Ok(line) = line else { break };
                    if tx.send(line).is_err() {
                        break;
                    }
                }
            });
        }
        Ok(())
    });

    let mut stats = IngestStats::default();
    for line in rx {
        stats.record(ingestor, &line).map_err(fatal)?;
    }
    acceptor
        .join()
        .map_err(|_| io::Error::other("acceptor thread panicked"))??;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::{MemorySink, RuleConfig, TelemetryStore};
    use std::io::Write;
    use std::net::TcpStream;

    fn ingestor() -> Ingestor<MemorySink> {
        Ingestor::new(
            TelemetryStore::in_memory(1000),
            RuleConfig::default(),
            MemorySink::default(),
        )
    }

    #[test]
    fn stream_counts() {
        let input = "AG1 a 1 1000 31.00 82.00 45.00\n\
                     AG1 a 1 1000 31.00 82.00 45.00\n\
                     garbage\n\
                     \n\
                     AG1 a 2 3000 39.00 82.00 45.00\n";
        let mut ing = ingestor();
        let stats = ingest_stream(input.as_bytes(), &mut ing).unwrap();
        assert_eq!(stats.lines, 4);
        assert_eq!(stats.appended, 2);
        assert_eq!(stats.duplicates, 1);
        assert_eq!(stats.rejected, 1);
        assert_eq!(stats.alerts, 1);
        assert_eq!(ing.len(), 2);
    }

    #[test]
    fn tcp_clients_are_merged_by_one_writer() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let clients: Vec<_> = (0..3)
            .map(|c| {
                thread::spawn(move || {
                    let mut s = TcpStream::connect(addr).unwrap();
                    for seq in 1..=20u32 {
                        writeln!(s, "AG1 c{c} {seq} {} 31.00 82.00 45.00", seq as u64 * 2000).unwrap();
                    }
                })
            })
            .collect();
        let mut ing = ingestor();
        let stats = serve_tcp(listener, &mut ing, Some(3)).unwrap();
        for c in clients {
            c.join().unwrap();
        }
        assert_eq!(stats.appended, 60);
        assert_eq!(ing.len(), 60);
    }
}
