use std::path::Path;

use serde::Serialize;

use super::corpus::{CorpusEntry, Manifest, Split};
use super::{Class, ClassifierError, Disease, KnnModel, SvmModel};
use crate::imaging::load_ppm;
use crate::pipeline::{classify, PipelineConfig, Verdict};
use crate::scalar::Scalar;

pub const REPORT_SCHEMA: &str = "cane-sentinel-report/1";

/// Column labels of [`EvalReport::disease_confusion`].
pub const DISEASE_COLUMNS: [&str; 4] = ["leaf_scald", "red_stripe", "mosaic", "healthy"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub path: String,
    pub actual: Verdict,
    pub predicted: Verdict,
    pub decision_value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub path: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitSummary {
    pub seed: u64,
    pub train_fraction: f64,
    pub subset: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub schema: String,
    pub split: Option<SplitSummary>,
    /// Images that made it through the pipeline.
    pub total: usize,
    /// Rows: actual healthy/infected. Columns: predicted healthy/infected.
    pub confusion: [[usize; 2]; 2],
    /// `trace(confusion) / total`.
    pub accuracy: f64,
    /// Fraction with the exact label right: healthy, or infected with the
    /// correct disease.
    pub label_accuracy: f64,
    /// Infected samples only. Rows: actual disease. Columns:
    /// [`DISEASE_COLUMNS`].
    pub disease_confusion: [[usize; 4]; 3],
    pub predictions: Vec<Prediction>,
    pub failures: Vec<Failure>,
}

impl EvalReport {
    fn empty() -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            split: None,
            total: 0,
            confusion: [[0; 2]; 2],
            accuracy: 0.0,
            label_accuracy: 0.0,
            disease_confusion: [[0; 4]; 3],
            predictions: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn with_split(mut self, split: &Split, subset: &str) -> Self {
        self.split = Some(SplitSummary {
            seed: split.seed,
            train_fraction: split.train_fraction,
            subset: subset.to_string(),
            size: self.total + self.failures.len(),
        });
        self
    }

    fn record(&mut self, entry: &CorpusEntry, predicted: Verdict, decision_value: f64) {
        let actual = Verdict {
            class: entry.class,
            disease: entry.disease,
        };
        let row = (entry.class == Class::Infected) as usize;
        let col = (predicted.class == Class::Infected) as usize;
        self.confusion[row][col] += 1;
        if let Some(d) = entry.disease {
            let col = predicted.disease.map_or(3, Disease::index);
            self.disease_confusion[d.index()][col] += 1;
        }
        self.total += 1;
        self.predictions.push(Prediction {
            path: entry.path.clone(),
            actual,
            predicted,
            decision_value,
        });
    }

    fn finish(&mut self) {
        let total = self.total.max(1) as f64;
        self.accuracy = (self.confusion[0][0] + self.confusion[1][1]) as f64 / total;
        let exact = self.predictions.iter().filter(|p| p.actual == p.predicted).count();
        self.label_accuracy = exact as f64 / total;
    }
}

/// Classifies every listed image. Per-image failures are collected in the
/// report; the run only fails when no image could be processed.
pub fn evaluate_corpus<T: Scalar>(
    svm: &SvmModel<T>,
    knn: &KnnModel<T>,
    manifest: &Manifest,
    subset: &[usize],
    cfg: &PipelineConfig,
) -> Result<EvalReport, ClassifierError> {
    if subset.is_empty() {
        return Err(ClassifierError::Manifest("corpus is empty".into()));
    }
    let mut report = EvalReport::empty();
    for &i in subset {
        let entry = &manifest.entries[i];
        match classify_entry(svm, knn, &manifest.resolve(entry), cfg) {
            Ok((verdict, value)) => report.record(entry, verdict, value),
            Err(error) => report.failures.push(Failure {
                path: entry.path.clone(),
                error,
            }),
        }
    }
    if report.total == 0 {
        return Err(ClassifierError::CorpusIo(report.failures.len()));
    }
    report.finish();
    Ok(report)
}

fn classify_entry<T: Scalar>(
    svm: &SvmModel<T>,
    knn: &KnnModel<T>,
    path: &Path,
    cfg: &PipelineConfig,
) -> Result<(Verdict, f64), String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let img = load_ppm(&bytes).map_err(|e| e.to_string())?;
    let c = classify(&img, svm, knn, cfg).map_err(|e| e.to_string())?;
    Ok((c.verdict, c.decision_value.to_f64_lossy()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{knn::Exemplar, Scaler};
    use crate::imaging::{encode_ppm, RgbImage};

    fn always_healthy() -> (SvmModel<f64>, KnnModel<f64>) {
        let scaler = Scaler {
            mean: vec![0.0; 8],
            std: vec![1.0; 8],
        };
        let svm = SvmModel {
            w: vec![0.0; 8],
            b: -1.0,
            c: 1.0,
            scaler: scaler.clone(),
        };
        let knn = KnnModel {
            k: 1,
            scaler,
            exemplars: vec![Exemplar {
                features: vec![0.0; 8],
                disease: Disease::Mosaic,
            }],
        };
        (svm, knn)
    }

    #[test]
    fn single_healthy_image() {
        let dir = tempfile::tempdir().unwrap();
        let img = RgbImage::filled(6, 6, [40, 150, 40]).unwrap();
        std::fs::write(dir.path().join("a.ppm"), encode_ppm(&img)).unwrap();
        let manifest = Manifest::parse("path,binary_label,disease\na.ppm,healthy,none\n", dir.path()).unwrap();
        let (svm, knn) = always_healthy();
        let r = evaluate_corpus(&svm, &knn, &manifest, &[0], &PipelineConfig::default()).unwrap();
        assert_eq!(r.confusion, [[1, 0], [0, 0]]);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.label_accuracy, 1.0);
    }

    #[test]
    fn failures_are_collected_until_all_fail() {
        let dir = tempfile::tempdir().unwrap();
        let img = RgbImage::filled(6, 6, [40, 150, 40]).unwrap();
        std::fs::write(dir.path().join("a.ppm"), encode_ppm(&img)).unwrap();
        let text = "path,binary_label,disease\na.ppm,infected,mosaic\nmissing.ppm,healthy,none\n";
        let manifest = Manifest::parse(text, dir.path()).unwrap();
        let (svm, knn) = always_healthy();
        let r = evaluate_corpus(&svm, &knn, &manifest, &[0, 1], &PipelineConfig::default()).unwrap();
        assert_eq!(r.total, 1);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.confusion, [[0, 0], [1, 0]]);
        assert_eq!(r.disease_confusion[Disease::Mosaic.index()][3], 1);
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(
            evaluate_corpus(&svm, &knn, &manifest, &[1], &PipelineConfig::default()).unwrap_err(),
            ClassifierError::CorpusIo(1)
        );
    }
}
