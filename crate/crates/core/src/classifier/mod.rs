//! Healthy/infected linear SVM, KNN disease labelling, model persistence and
//! corpus evaluation.

pub mod corpus;
pub mod eval;
pub mod knn;
pub mod model_io;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use corpus::{CorpusEntry, Manifest, Split};
pub use eval::{evaluate_corpus, EvalReport};
pub use knn::{knn_predict, KnnModel};
pub use model_io::{load_knn, load_svm, save_knn, save_svm, MODEL_SCHEMA};
pub use svm::{svm_decision, svm_train, SvmModel, SvmParams, TrainingSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("training data needs both classes")]
    SingleClassData,
    #[error("training data is empty")]
    EmptyTrainingSet,
    #[error("expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("solver hit the iteration cap ({iterations}) with KKT violation {violation:e}")]
    NoConvergence { iterations: usize, violation: f64 },
    #[error("model has no exemplars")]
    EmptyModel,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported model schema {found:?}")]
    SchemaVersionMismatch { found: String },
    #[error("malformed model document: {0}")]
    MalformedDocument(String),
    #[error("corpus manifest: {0}")]
    Manifest(String),
    #[error("corpus unreadable: every image failed ({0} failures)")]
    CorpusIo(usize),
}

/// Binary verdict. Infected is the positive (+1) class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Healthy,
    Infected,
}

impl Class {
    pub fn sign(self) -> i8 {
        match self {
            Class::Healthy => -1,
            Class::Infected => 1,
        }
    }

    pub fn from_sign(y: i8) -> Option<Class> {
        match y {
            -1 => Some(Class::Healthy),
            1 => Some(Class::Infected),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class::Healthy => "healthy",
            Class::Infected => "infected",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Class {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "healthy" => Ok(Class::Healthy),
            "infected" => Ok(Class::Infected),
            _ => Err(format!("unknown class {s:?}")),
        }
    }
}

/// Foliar diseases the labeller distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disease {
    LeafScald,
    RedStripe,
    Mosaic,
}

impl Disease {
    pub const ALL: [Disease; 3] = [Disease::LeafScald, Disease::RedStripe, Disease::Mosaic];

    pub fn as_str(self) -> &'static str {
        match self {
            Disease::LeafScald => "leaf_scald",
            Disease::RedStripe => "red_stripe",
            Disease::Mosaic => "mosaic",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Disease {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Disease {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Disease::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown disease {s:?}"))
    }
}

/// Per-feature z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Scaler<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> Scaler<T> {
    /// Features without variance get a unit standard deviation.
    pub fn fit(rows: &[Vec<T>]) -> Scaler<T> {
        let d = rows.first().map_or(0, Vec::len);
        let n = T::from_count(rows.len().max(1));
        let mut mean = vec![T::zero(); d];
        let mut std = vec![T::one(); d];
        for j in 0..d {
            let first = rows[0][j];
            let m = rows.iter().fold(T::zero(), |a, r| a + r[j]) / n;
            mean[j] = m;
            if rows.iter().all(|r| r[j] == first) {
                mean[j] = first;
                continue;
            }
            let var = rows.iter().fold(T::zero(), |a, r| {
                let dv = r[j] - m;
                a + dv * dv
            }) / n;
            let s = var.sqrt();
            if s > T::zero() {
                std[j] = s;
            }
        }
        Scaler { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    pub(crate) fn validate(&self) -> Result<(), ClassifierError> {
        if self.mean.len() != self.std.len() {
            return Err(ClassifierError::MalformedDocument(
                "scaler mean/std lengths differ".into(),
            ));
        }
        if self.std.iter().any(|s| !(s.is_finite() && *s > T::zero())) || self.mean.iter().any(|m| !m.is_finite()) {
            return Err(ClassifierError::MalformedDocument(
                "scaler entries must be finite with positive std".into(),
            ));
        }
        Ok(())
    }
}

fn check_dim(expected: usize, found: usize) -> Result<(), ClassifierError> {
    if expected != found {
        return Err(ClassifierError::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaler_unit_std_for_constant_feature() {
        let rows = vec![vec![0.1, 2.0], vec![0.1, 4.0], vec![0.1, 6.0]];
        let s = Scaler::fit(&rows);
        assert_eq!(s.mean[0], 0.1);
        assert_eq!(s.std[0], 1.0);
        assert_eq!(s.mean[1], 4.0);
        assert!((s.std[1] - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.transform(&[0.1, 4.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn label_text_forms() {
        assert_eq!("mosaic".parse::<Disease>().unwrap(), Disease::Mosaic);
        assert!("eye_spot".parse::<Disease>().is_err());
        assert_eq!("infected".parse::<Class>().unwrap().sign(), 1);
        assert_eq!(Class::from_sign(-1), Some(Class::Healthy));
        assert_eq!(Class::from_sign(0), None);
    }
}
