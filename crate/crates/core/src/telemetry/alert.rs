//! Farmer notifications. Alerts are written as JSON lines
//! `{"ts", "source", "severity", "message", "ref"}` to an [`AlertSink`].

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::agronomy::{Advisory, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertSource {
    RuleEngine,
    Classifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alert {
    pub ts: u64,
    pub source: AlertSource,
    pub severity: Severity,
    pub message: String,
    /// The reading (`node_id/seq`) or image path the alert is about.
    #[serde(rename = "ref")]
    pub reference: String,
}

impl Alert {
    /// Rule-engine alert for the non-`Ok` advisories; `None` when every
    /// parameter is in band.
    pub fn from_advisories(ts: u64, reference: String, advisories: &[Advisory]) -> Option<Alert> {
        let flagged: Vec<&Advisory> = advisories.iter().filter(|a| a.severity != Severity::Ok).collect();
        let severity = flagged.iter().map(|a| a.severity).max()?;
        let message = flagged
            .iter()
            .map(|a| format!("{}: {}", a.band, a.message))
            .collect::<Vec<_>>()
            .join("; ");
        Some(Alert {
            ts,
            source: AlertSource::RuleEngine,
            severity,
            message,
            reference,
        })
    }

    /// Classifier alert for an infected leaf. Always critical.
    pub fn infected_leaf(ts: u64, path: String, disease: &str, decision_value: f64) -> Alert {
        Alert {
            ts,
            source: AlertSource::Classifier,
            severity: Severity::Critical,
            message: format!("infected leaf: {disease} (decision value {decision_value:.4})"),
            reference: path,
        }
    }

    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("alert serialises");
        s.push('\n');
        s
    }
}

pub trait AlertSink {
    fn emit(&mut self, alert: &Alert) -> io::Result<()>;
}

/// Appends one JSON document per line to any writer (a file opened in
/// append mode, stdout, a buffer).
pub struct JsonLinesSink<W: Write> {
    out: W,
}

impl<W: Write> JsonLinesSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> AlertSink for JsonLinesSink<W> {
    fn emit(&mut self, alert: &Alert) -> io::Result<()> {
        self.out.write_all(alert.to_json_line().as_bytes())?;
        self.out.flush()
    }
}

#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub alerts: Vec<Alert>,
}

impl AlertSink for MemorySink {
    fn emit(&mut self, alert: &Alert) -> io::Result<()> {
        self.alerts.push(alert.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agronomy::{assess_values, GrowthStage, SoilBand};

    #[test]
    fn in_band_gives_no_alert() {
        let adv = assess_values(32.0, 82.0, 45.0, GrowthStage::Growth, &SoilBand::default()).unwrap();
        assert!(Alert::from_advisories(1, "n/1".into(), &adv).is_none());
    }

    #[test]
    fn json_line_schema() {
        let adv = assess_values(39.0, 82.0, 10.0, GrowthStage::Growth, &SoilBand::default()).unwrap();
        let alert = Alert::from_advisories(1_700_000_000_000, "n07/3".into(), &adv).unwrap();
        assert_eq!(alert.severity, Severity::Critical);
        assert!(alert.message.starts_with("stagnant: "));
        assert!(alert.message.contains("dry: "));
        let mut sink = JsonLinesSink::new(Vec::new());
        sink.emit(&alert).unwrap();
        let line = String::from_utf8(sink.into_inner()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 5);
        assert_eq!(v["source"], "rule_engine");
        assert_eq!(v["severity"], "critical");
        assert_eq!(v["ref"], "n07/3");
        assert!(line.ends_with('\n'));
    }
}
