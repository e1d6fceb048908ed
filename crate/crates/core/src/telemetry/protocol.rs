//! `AG1 <node_id> <seq> <ts_ms> <t_c> <rh> <soil>\n`
//!
//! Single spaces between the seven fields, a single trailing newline. Numbers
//! are canonical decimals: no leading zeros, no plus sign. The three measured
//! values carry exactly two decimals, and only `t_c` may be negative.

use thiserror::Error;

use crate::agronomy::{NodeId, SensorReading};

pub const MAGIC: &str = "AG1";
pub const FIELD_COUNT: usize = 7;
/// Accepted temperature span in °C.
pub const TEMP_RANGE: (f64, f64) = (-40.0, 85.0);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("line does not start with {MAGIC}")]
    BadMagic,
    #[error("expected {FIELD_COUNT} fields, found {0}")]
    FieldCount(usize),
    #[error("field {0} is not a canonical number")]
    NumberSyntax(&'static str),
    #[error("field {0} out of range")]
    RangeViolation(&'static str),
    #[error("cannot encode field {0}: out of range")]
    FieldOutOfRange(&'static str),
}

/// Value in hundredths, rounded half away from zero.
fn hundredths(v: f64) -> i64 {
    (v * 100.0).round() as i64
}

fn fixed2(n: i64) -> String {
    let sign = if n < 0 { "-" } else { "" };
    let a = n.unsigned_abs();
    format!("{sign}{}.{:02}", a / 100, a % 100)
}

fn check_range(field: &'static str, v: f64, lo: f64, hi: f64) -> Result<i64, WireError> {
    if !v.is_finite() || v < lo || v > hi {
        return Err(WireError::FieldOutOfRange(field));
    }
    let n = hundredths(v);
    if n < hundredths(lo) || n > hundredths(hi) {
        return Err(WireError::FieldOutOfRange(field));
    }
    Ok(n)
}

pub fn encode_reading(r: &SensorReading) -> Result<String, WireError> {
    if r.timestamp_ms == 0 {
        return Err(WireError::FieldOutOfRange("ts_ms"));
    }
    let t = check_range("t_c", r.temp_c, TEMP_RANGE.0, TEMP_RANGE.1)?;
    let rh = check_range("rh", r.humidity_pct, 0.0, 100.0)?;
    let soil = check_range("soil", r.soil_pct, 0.0, 100.0)?;
    Ok(format!(
        "{MAGIC} {} {} {} {} {} {}\n",
        r.node_id,
        r.seq,
        r.timestamp_ms,
        fixed2(t),
        fixed2(rh),
        fixed2(soil)
    ))
}

fn canonical_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) && (s == "0" || !s.starts_with('0'))
}

fn parse_uint<T: std::str::FromStr>(field: &'static str, s: &str) -> Result<T, WireError> {
    if !canonical_digits(s) {
        return Err(WireError::NumberSyntax(field));
    }
    s.parse().map_err(|_| WireError::RangeViolation(field))
}

fn parse_fixed2(field: &'static str, s: &str, allow_negative: bool) -> Result<f64, WireError> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) if allow_negative => (true, rest),
        Some(_) => return Err(WireError::NumberSyntax(field)),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').ok_or(WireError::NumberSyntax(field))?;
    if !canonical_digits(int) || frac.len() != 2 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(WireError::NumberSyntax(field));
    }
    if neg && int == "0" && frac == "00" {
        return Err(WireError::NumberSyntax(field));
    }
    s.parse::<f64>().map_err(|_| WireError::NumberSyntax(field))
}

fn in_range(field: &'static str, v: f64, lo: f64, hi: f64) -> Result<f64, WireError> {
    if v < lo || v > hi {
        return Err(WireError::RangeViolation(field));
    }
    Ok(v)
}

/// Strict parse of one line; the trailing `\n` is optional.
pub fn parse_reading(line: &str) -> Result<SensorReading, WireError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let fields: Vec<&str> = line.split(' ').collect();
    if fields[0] != MAGIC {
        return Err(WireError::BadMagic);
    }
    if fields.len() != FIELD_COUNT {
        return Err(WireError::FieldCount(fields.len()));
    }
    let node_id = NodeId::new(fields[1]).map_err(|_| WireError::RangeViolation("node_id"))?;
    let seq: u32 = parse_uint("seq", fields[2])?;
    let timestamp_ms: u64 = parse_uint("ts_ms", fields[3])?;
    if timestamp_ms == 0 {
        return Err(WireError::RangeViolation("ts_ms"));
    }
    let temp_c = in_range("t_c", parse_fixed2("t_c", fields[4], true)?, TEMP_RANGE.0, TEMP_RANGE.1)?;
    let humidity_pct = in_range("rh", parse_fixed2("rh", fields[5], false)?, 0.0, 100.0)?;
    let soil_pct = in_range("soil", parse_fixed2("soil", fields[6], false)?, 0.0, 100.0)?;
    Ok(SensorReading {
        node_id,
        seq,
        timestamp_ms,
        temp_c,
        humidity_pct,
        soil_pct,
    })
}
