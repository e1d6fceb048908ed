//! The single JSON run configuration shared by every subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use cane_sentinel::classifier::knn::DEFAULT_K;
use cane_sentinel::classifier::svm::{DEFAULT_C, DEFAULT_MAX_ITERATIONS, DEFAULT_TOL};
use cane_sentinel::classifier::SvmParams;
use cane_sentinel::pipeline::PipelineConfig;
use cane_sentinel::telemetry::{EnvironmentModel, RuleConfig};
use serde::{Deserialize, Serialize};

use crate::synth::CorpusSpec;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSection {
    pub c: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SvmSection {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            tol: DEFAULT_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl SvmSection {
    pub fn params(&self) -> SvmParams<f64> {
        SvmParams {
            c: self.c,
            tol: self.tol,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnSection {
    pub k: usize,
}

impl Default for KnnSection {
    fn default() -> Self {
        Self { k: DEFAULT_K }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub seed: u64,
    pub train_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            seed: 42,
            train_fraction: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TelemetrySection {
    pub nodes: usize,
    pub poll_period_ms: u64,
    pub seed: u64,
    pub start_ms: u64,
    pub environment: EnvironmentModel,
    /// `host:port` for `serve` when no input file is given.
    pub listen: String,
    pub data_dir: PathBuf,
    pub alerts: PathBuf,
    pub capacity: usize,
}

impl Default for TelemetrySection {
    fn default() -> Self {
        Self {
            nodes: 3,
            poll_period_ms: 5000,
            seed: 1,
            start_ms: 1_700_000_000_000,
            environment: EnvironmentModel::default(),
            listen: "127.0.0.1:7878".into(),
            data_dir: PathBuf::from("data"),
            alerts: PathBuf::from("alerts.jsonl"),
            capacity: cane_sentinel::telemetry::store::DEFAULT_CAPACITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub svm: SvmSection,
    pub knn: KnnSection,
    pub split: SplitSection,
    pub agronomy: RuleConfig,
    pub telemetry: TelemetrySection,
    pub corpus: CorpusSpec,
}

impl RunConfig {
    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        cfg.validate()
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        let p = &self.pipeline;
        if p.k != 3 {
            return Err(format!(
                "pipeline.k must be 3 (background, healthy, lesion), got {}",
                p.k
            ));
        }
        if p.se_size == 0 || p.se_size.is_multiple_of(2) {
            return Err(format!("pipeline.se_size must be odd, got {}", p.se_size));
        }
        if p.median_window < 3 || p.median_window.is_multiple_of(2) {
            return Err(format!(
                "pipeline.median_window must be odd and at least 3, got {}",
                p.median_window
            ));
        }
        if !(p.min_lesion_contrast >= 0.0 && p.min_lesion_contrast.is_finite()) {
            return Err("pipeline.min_lesion_contrast must be finite and non-negative".into());
        }
        if !(self.svm.c > 0.0 && self.svm.c.is_finite()) {
            return Err(format!("svm.c must be positive, got {}", self.svm.c));
        }
        if !(self.svm.tol > 0.0 && self.svm.tol.is_finite()) {
            return Err(format!("svm.tol must be positive, got {}", self.svm.tol));
        }
        if self.svm.max_iterations == 0 {
            return Err("svm.max_iterations must be positive".into());
        }
        if self.knn.k == 0 {
            return Err("knn.k must be at least 1".into());
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return Err(format!(
                "split.train_fraction must lie in (0, 1), got {}",
                self.split.train_fraction
            ));
        }
        self.agronomy.soil_band.validate().map_err(|e| e.to_string())?;
        let t = &self.telemetry;
        if t.poll_period_ms == 0 || t.nodes == 0 || t.nodes > 100 {
            return Err("telemetry.poll_period_ms must be positive and telemetry.nodes in 1..=100".into());
        }
        if t.capacity == 0 {
            return Err("telemetry.capacity must be positive".into());
        }
        let img = &self.corpus.image;
        if img.width < 16 || img.height < 16 {
            return Err("corpus.image width and height must be at least 16".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_unknown_keys_fail() {
        RunConfig::default().validate().unwrap();
        assert!(serde_json::from_str::<RunConfig>(r#"{"pipelin": {}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"pipeline": {"sz": 3}}"#).is_err());
        let cfg: RunConfig =
            serde_json::from_str(r#"{"pipeline": {"order": "standard"}, "agronomy": {"stage": "ripening"}}"#).unwrap();
        assert_eq!(cfg.pipeline.order, cane_sentinel::imaging::MorphologyOrder::Standard);
        cfg.validate().unwrap();
    }

    #[test]
    fn semantic_checks() {
        let mut cfg = RunConfig::default();
        cfg.pipeline.k = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.pipeline.se_size = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.agronomy.soil_band.low = 70.0;
        assert!(cfg.validate().is_err());
    }
}
