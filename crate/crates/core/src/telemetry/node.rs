//! Simulated field node: a DHT11 temperature/humidity sensor plus a
//! resistive soil-moisture probe, driven by a seeded environment model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agronomy::{NodeId, SensorReading};

/// The DHT11 refreshes its measurement at most once every 2 s.
pub const REFRESH_INTERVAL_MS: u64 = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NodeError {
    #[error("poll at {now_ms} ms precedes the previous poll at {last_ms} ms")]
    ClockWentBackwards { now_ms: u64, last_ms: u64 },
    #[error("normalised resistance {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("sequence counter exhausted")]
    SeqExhausted,
}

/// Volumetric moisture from the normalised inter-probe resistance: wet soil
/// conducts better, so moisture falls linearly as resistance rises.
pub fn soil_from_resistance(r_norm: f64) -> Result<f64, NodeError> {
    if !(0.0..=1.0).contains(&r_norm) {
        return Err(NodeError::OutOfRange(r_norm));
    }
    Ok((100.0 * (1.0 - r_norm)).clamp(0.0, 100.0))
}

/// Slowly varying ground truth: a daily sinusoid plus bounded uniform noise
/// for each signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentModel {
    pub temp_mean_c: f64,
    pub temp_amplitude_c: f64,
    pub temp_noise_c: f64,
    pub humidity_mean_pct: f64,
    pub humidity_amplitude_pct: f64,
    pub humidity_noise_pct: f64,
    pub resistance_mean: f64,
    pub resistance_amplitude: f64,
    pub resistance_noise: f64,
    pub period_ms: u64,
}

impl Default for EnvironmentModel {
    fn default() -> Self {
        Self {
            temp_mean_c: 31.0,
            temp_amplitude_c: 5.0,
            temp_noise_c: 1.0,
            humidity_mean_pct: 78.0,
            humidity_amplitude_pct: 8.0,
            humidity_noise_pct: 2.0,
            resistance_mean: 0.55,
            resistance_amplitude: 0.1,
            resistance_noise: 0.02,
            period_ms: 86_400_000,
        }
    }
}

impl EnvironmentModel {
    fn wave(&self, now_ms: u64, phase: f64) -> f64 {
        let period = self.period_ms.max(1) as f64;
        let t = (now_ms % self.period_ms.max(1)) as f64 / period;
        (std::f64::consts::TAU * t + phase).sin()
    }

    /// DHT11-style sample: integer °C and %RH, soil rounded to hundredths.
    fn sample(&self, now_ms: u64, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
        let mut noise = |amp: f64| if amp > 0.0 { rng.gen_range(-amp..=amp) } else { 0.0 };
        let temp = self.temp_mean_c + self.temp_amplitude_c * self.wave(now_ms, 0.0) + noise(self.temp_noise_c);
        let rh = self.humidity_mean_pct - self.humidity_amplitude_pct * self.wave(now_ms, 0.0)
            + noise(self.humidity_noise_pct);
        let r =
            self.resistance_mean + self.resistance_amplitude * self.wave(now_ms, 1.0) + noise(self.resistance_noise);
        let soil = soil_from_resistance(r.clamp(0.0, 1.0)).expect("clamped");
        (
            temp.round().clamp(-40.0, 85.0),
            rh.round().clamp(0.0, 100.0),
            (soil * 100.0).round() / 100.0,
        )
    }
}

#[derive(Debug, Clone)]
pub struct NodeState {
    node_id: NodeId,
    next_seq: u32,
    last_poll_ms: Option<u64>,
    last_refresh_ms: Option<u64>,
    last_sample: Option<(f64, f64, f64)>,
    env: EnvironmentModel,
    rng: ChaCha8Rng,
}

impl NodeState {
    pub fn new(node_id: NodeId, env: EnvironmentModel, seed: u64) -> Self {
        Self {
            node_id,
            next_seq: 0,
            last_poll_ms: None,
            last_refresh_ms: None,
            last_sample: None,
            env,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn node_id(&self) -> &NodeId {
        &self.node_id
    }

    pub fn last_refresh_ms(&self) -> Option<u64> {
        self.last_refresh_ms
    }

    /// Returns the cached measurement (with a fresh sequence number) when the
    /// last refresh is under 2 s old, otherwise samples the environment.
    pub fn poll(&mut self, now_ms: u64) -> Result<SensorReading, NodeError> {
        if let Some(last_ms) = self.last_poll_ms {
            if now_ms < last_ms {
                return Err(NodeError::ClockWentBackwards { now_ms, last_ms });
            }
        }
        let stale = match (self.last_refresh_ms, self.last_sample) {
            (Some(t), Some(s)) if now_ms - t < REFRESH_INTERVAL_MS => Some(s),
            _ => None,
        };
        let (temp_c, humidity_pct, soil_pct) = match stale {
            Some(s) => s,
            None => {
                let s = self.env.sample(now_ms, &mut self.rng);
                self.last_sample = Some(s);
                self.last_refresh_ms = Some(now_ms);
                s
            }
        };
        let seq = self.next_seq;
        self.next_seq = seq.checked_add(1).ok_or(NodeError::SeqExhausted)?;
        self.last_poll_ms = Some(now_ms);
        Ok(SensorReading {
            node_id: self.node_id.clone(),
            seq,
            timestamp_ms: now_ms,
            temp_c,
            humidity_pct,
            soil_pct,
        })
    }
}

/// Functional form of [`NodeState::poll`].
pub fn node_poll(mut state: NodeState, now_ms: u64) -> Result<(NodeState, SensorReading), NodeError> {
    let r = state.poll(now_ms)?;
    Ok((state, r))
}

/// A set of nodes driven by one stepped clock.
#[derive(Debug, Clone)]
pub struct Simulation {
    nodes: Vec<NodeState>,
    now_ms: u64,
    step_ms: u64,
}

impl Simulation {
    /// Nodes are named `node_00`, `node_01`, …; node `i` uses seed
    /// `seed + i`.
    pub fn new(node_count: usize, env: EnvironmentModel, seed: u64, start_ms: u64, step_ms: u64) -> Self {
        let nodes = (0..node_count)
            .map(|i| {
                let id = NodeId::new(format!("node_{i:02}")).expect("valid generated id");
                NodeState::new(id, env.clone(), seed.wrapping_add(i as u64))
            })
            .collect();
        Self {
            nodes,
            now_ms: start_ms,
            step_ms,
        }
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    /// Polls every node at the current time, then advances the clock.
    pub fn tick(&mut self) -> Result<Vec<SensorReading>, NodeError> {
        let now = self.now_ms;
        let readings = self.nodes.iter_mut().map(|n| n.poll(now)).collect::<Result<_, _>>()?;
        self.now_ms += self.step_ms;
        Ok(readings)
    }
}
