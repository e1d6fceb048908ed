//! Growth-stage-aware rule engine for temperature, humidity and soil
//! moisture readings.
//!
//! Ideal ranges are inclusive at both ends; "below 25" is strict.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthStage {
    Germination,
    #[default]
    Growth,
    Ripening,
}

impl FromStr for GrowthStage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "germination" => Ok(Self::Germination),
            "growth" => Ok(Self::Growth),
            "ripening" => Ok(Self::Ripening),
            _ => Err(format!("unknown growth stage {s:?}")),
        }
    }
}

impl fmt::Display for GrowthStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Germination => "germination",
            Self::Growth => "growth",
            Self::Ripening => "ripening",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Temperature,
    Humidity,
    SoilMoisture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Ok,
    Warn,
    Critical,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ok => "ok",
            Self::Warn => "warn",
            Self::Critical => "critical",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advisory {
    pub parameter: Parameter,
    pub severity: Severity,
    /// Short machine-readable band code, e.g. `"stagnant"`.
    pub band: String,
    pub message: String,
}

impl Advisory {
    fn new(parameter: Parameter, severity: Severity, band: &str, message: String) -> Self {
        Self {
            parameter,
            severity,
            band: band.to_string(),
            message,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgronomyError {
    #[error("soil band low ({low}) must be below high ({high}) and both within 0..=100")]
    BadSoilConfig { low: f64, high: f64 },
    #[error("invalid node id {0:?}: 1-16 characters from [a-z0-9_]")]
    BadNodeId(String),
    #[error("reading field {field} out of range: {value}")]
    ReadingOutOfRange { field: &'static str, value: f64 },
}

/// Sensor node identifier: 1-16 characters from `[a-z0-9_]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, AgronomyError> {
        let id = id.into();
        let ok = (1..=16).contains(&id.len())
            && id
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_');
        if ok {
            Ok(Self(id))
        } else {
            Err(AgronomyError::BadNodeId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for NodeId {
    type Error = AgronomyError;

    fn try_from(s: String) -> Result<Self, AgronomyError> {
        Self::new(s)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> String {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One telemetry sample from a field node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorReading {
    pub node_id: NodeId,
    pub seq: u32,
    /// Unix time in milliseconds.
    pub timestamp_ms: u64,
    pub temp_c: f64,
    pub humidity_pct: f64,
    /// Volumetric soil water content, percent.
    pub soil_pct: f64,
}

impl SensorReading {
    pub fn validate(&self) -> Result<(), AgronomyError> {
        let pct = |field, value: f64| {
            if (0.0..=100.0).contains(&value) {
                Ok(())
            } else {
                Err(AgronomyError::ReadingOutOfRange { field, value })
            }
        };
        pct("humidity_pct", self.humidity_pct)?;
        pct("soil_pct", self.soil_pct)?;
        if !self.temp_c.is_finite() {
            return Err(AgronomyError::ReadingOutOfRange {
                field: "temp_c",
                value: self.temp_c,
            });
        }
        if self.timestamp_ms == 0 {
            return Err(AgronomyError::ReadingOutOfRange {
                field: "timestamp_ms",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// Acceptable volumetric soil moisture, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoilBand {
    pub low: f64,
    pub high: f64,
}

impl Default for SoilBand {
    fn default() -> Self {
        Self { low: 30.0, high: 60.0 }
    }
}

impl SoilBand {
    pub fn new(low: f64, high: f64) -> Result<Self, AgronomyError> {
        let band = Self { low, high };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<(), AgronomyError> {
        let in_range = |v: f64| (0.0..=100.0).contains(&v);
        if !(self.low < self.high && in_range(self.low) && in_range(self.high)) {
            return Err(AgronomyError::BadSoilConfig {
                low: self.low,
                high: self.high,
            });
        }
        Ok(())
    }
}

pub fn assess_temperature(stage: GrowthStage, temp_c: f64) -> Advisory {
    use Severity::*;
    let p = Parameter::Temperature;
    if !temp_c.is_finite() {
        return Advisory::new(
            p,
            Critical,
            "sensor-fault",
            "temperature reading is not a number".into(),
        );
    }
    let (severity, band, note) = match stage {
        GrowthStage::Germination => {
            if (32.0..=38.0).contains(&temp_c) {
                (Ok, "ideal", "ideal for germination (32-38 °C)")
            } else if temp_c > 38.0 {
                (
                    Critical,
                    "photosynthesis-slows",
                    "above 38 °C photosynthesis slows and respiration rises",
                )
            } else {
                (Warn, "cool", "below the 32-38 °C germination range")
            }
        }
        GrowthStage::Growth => {
            if (30.0..=34.0).contains(&temp_c) {
                (Ok, "ideal", "most favourable growth range (30-34 °C)")
            } else if temp_c < 25.0 {
                (Warn, "slow", "growth rate drops below 25 °C")
            } else if temp_c < 30.0 || temp_c <= 35.0 {
                (
                    Warn,
                    "reduced-rate",
                    "outside the 30-34 °C optimum; growth rate reduced",
                )
            } else if temp_c <= 38.0 {
                (Warn, "slowing", "growth slows above 35 °C")
            } else {
                (Critical, "stagnant", "growth almost stagnant above 38 °C")
            }
        }
        GrowthStage::Ripening => {
            if (12.0..=14.0).contains(&temp_c) {
                (Ok, "ideal", "desirable for ripening (12-14 °C)")
            } else if temp_c < 12.0 {
                (Warn, "too-cold", "below the 12-14 °C ripening range")
            } else {
                (Warn, "too-warm", "above the 12-14 °C ripening range")
            }
        }
    };
    Advisory::new(p, severity, band, format!("{temp_c:.1} °C at {stage}: {note}"))
}

pub fn assess_humidity(stage: GrowthStage, humidity_pct: f64) -> Advisory {
    let (lo, hi) = match stage {
        GrowthStage::Germination | GrowthStage::Growth => (80.0, 85.0),
        GrowthStage::Ripening => (50.0, 65.0),
    };
    let (severity, band) = if (lo..=hi).contains(&humidity_pct) {
        (Severity::Ok, "ideal")
    } else if humidity_pct < lo {
        (Severity::Warn, "low")
    } else if humidity_pct > hi {
        (Severity::Warn, "high")
    } else {
        (Severity::Critical, "sensor-fault")
    };
    Advisory::new(
        Parameter::Humidity,
        severity,
        band,
        format!("{humidity_pct:.1} %RH at {stage}; ideal {lo:.0}-{hi:.0} %RH"),
    )
}

pub fn assess_soil(soil_pct: f64, band: &SoilBand) -> Advisory {
    let (severity, code) = if (band.low..=band.high).contains(&soil_pct) {
        (Severity::Ok, "ideal")
    } else if soil_pct < band.low {
        (Severity::Warn, "dry")
    } else if soil_pct > band.high {
        (Severity::Warn, "wet")
    } else {
        (Severity::Critical, "sensor-fault")
    };
    Advisory::new(
        Parameter::SoilMoisture,
        severity,
        code,
        format!(
            "soil moisture {soil_pct:.1} %; target {:.0}-{:.0} %",
            band.low, band.high
        ),
    )
}

/// One advisory per parameter, in the order temperature, humidity, soil.
pub fn assess(
    reading: &SensorReading,
    stage: GrowthStage,
    soil_band: &SoilBand,
) -> Result<Vec<Advisory>, AgronomyError> {
    assess_values(reading.temp_c, reading.humidity_pct, reading.soil_pct, stage, soil_band)
}

pub fn assess_values(
    temp_c: f64,
    humidity_pct: f64,
    soil_pct: f64,
    stage: GrowthStage,
    soil_band: &SoilBand,
) -> Result<Vec<Advisory>, AgronomyError> {
    soil_band.validate()?;
    Ok(vec![
        assess_temperature(stage, temp_c),
        assess_humidity(stage, humidity_pct),
        assess_soil(soil_pct, soil_band),
    ])
}

pub fn overall_severity(advisories: &[Advisory]) -> Severity {
    advisories.iter().map(|a| a.severity).max().unwrap_or(Severity::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use GrowthStage::*;
    use Severity::*;

    fn t(stage: GrowthStage, v: f64) -> (Severity, String) {
        let a = assess_temperature(stage, v);
        (a.severity, a.band)
    }

    #[test]
    fn temperature_table() {
        assert_eq!(t(Germination, 35.0).0, Ok);
        assert_eq!(t(Germination, 31.9), (Warn, "cool".into()));
        assert_eq!(t(Germination, 38.5), (Critical, "photosynthesis-slows".into()));
        assert_eq!(t(Growth, 39.0), (Critical, "stagnant".into()));
        assert_eq!(t(Growth, 25.0), (Warn, "reduced-rate".into()));
        assert_eq!(t(Growth, 24.99), (Warn, "slow".into()));
        assert_eq!(t(Growth, 34.5), (Warn, "reduced-rate".into()));
        assert_eq!(t(Growth, 35.0), (Warn, "reduced-rate".into()));
        assert_eq!(t(Growth, 35.01), (Warn, "slowing".into()));
        assert_eq!(t(Growth, 38.0), (Warn, "slowing".into()));
        assert_eq!(t(Ripening, 13.0).0, Ok);
        assert_eq!(t(Ripening, 11.0), (Warn, "too-cold".into()));
        assert_eq!(t(Ripening, 20.0), (Warn, "too-warm".into()));
        assert_eq!(t(Growth, f64::NAN), (Critical, "sensor-fault".into()));
    }

    #[test]
    fn humidity_table() {
        assert_eq!(assess_humidity(Growth, 82.0).severity, Ok);
        assert_eq!(assess_humidity(Ripening, 60.0).severity, Ok);
        assert_eq!(assess_humidity(Ripening, 85.0).severity, Warn);
        assert_eq!(assess_humidity(Germination, 79.0).band, "low");
    }

    fn reading(temp_c: f64, humidity_pct: f64, soil_pct: f64) -> SensorReading {
        SensorReading {
            node_id: NodeId::new("n07").unwrap(),
            seq: 1,
            timestamp_ms: 1_700_000_000_000,
            temp_c,
            humidity_pct,
            soil_pct,
        }
    }

    #[test]
    fn combined_assessment() {
        let band = SoilBand::default();
        let all_ok = assess(&reading(32.0, 82.0, 45.0), Growth, &band).unwrap();
        assert!(all_ok.iter().all(|a| a.severity == Ok));
        let hot = assess(&reading(39.0, 82.0, 45.0), Growth, &band).unwrap();
        assert_eq!(overall_severity(&hot), Critical);
        let dry = assess_values(32.0, 82.0, 10.0, Growth, &SoilBand::new(30.0, 60.0).unwrap()).unwrap();
        assert_eq!(dry[2].severity, Warn);
        assert_eq!(dry[2].band, "dry");
        assert_eq!(dry[2].parameter, Parameter::SoilMoisture);
    }

    #[test]
    fn soil_band_validation() {
        assert!(SoilBand::new(60.0, 30.0).is_err());
        assert!(SoilBand::new(40.0, 40.0).is_err());
        let bad = SoilBand { low: 50.0, high: 10.0 };
        assert_eq!(
            assess(&reading(30.0, 80.0, 20.0), Growth, &bad).unwrap_err(),
            AgronomyError::BadSoilConfig { low: 50.0, high: 10.0 }
        );
    }

    #[test]
    fn node_ids_and_reading_ranges() {
        assert!(NodeId::new("field_07").is_ok());
        for bad in ["", "N07", "node-7", "abcdefghijklmnopq"] {
            assert!(NodeId::new(bad).is_err(), "{bad}");
        }
        assert!(reading(30.0, 80.0, 20.0).validate().is_ok());
        assert!(reading(30.0, 100.5, 20.0).validate().is_err());
        assert!(reading(30.0, 50.0, -1.0).validate().is_err());
        let json = serde_json::to_string(&reading(30.0, 80.0, 20.0)).unwrap();
        assert!(json.starts_with("{\"node_id\":\"n07\""));
        assert!(serde_json::from_str::<SensorReading>(&json.replace("n07", "N07")).is_err());
    }

    #[test]
    fn every_temperature_maps_to_one_severity() {
        for stage in [Germination, Growth, Ripening] {
            let mut prev_growth = Ok;
            for i in -100..=600 {
                let v = i as f64 / 10.0;
                let a = assess_temperature(stage, v);
                assert_eq!(a, assess_temperature(stage, v));
                if stage == Growth && v > 34.0 {
                    assert!(a.severity >= prev_growth, "{v}");
                    prev_growth = a.severity;
                }
            }
        }
    }
}
