//! Versioned JSON documents for trained models.
//!
//! Field order is fixed by the document structs, so `save(load(save(m)))`
//! reproduces the same bytes, and floats round-trip exactly.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::knn::{Exemplar, KnnModel};
use super::svm::SvmModel;
use super::{ClassifierError, Scaler};
use crate::scalar::Scalar;

pub const MODEL_SCHEMA: &str = "cane-sentinel-model/1";

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
struct SvmDocument<T> {
    schema: String,
    model: String,
    kernel: String,
    c: T,
    w: Vec<T>,
    b: T,
    scaler: Scaler<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
struct KnnDocument<T> {
    schema: String,
    model: String,
    k: usize,
    scaler: Scaler<T>,
    exemplars: Vec<Exemplar<T>>,
}

pub fn save_svm<T: Scalar>(model: &SvmModel<T>) -> String {
    let doc = SvmDocument {
        schema: MODEL_SCHEMA.to_string(),
        model: "svm".to_string(),
        kernel: SvmModel::<T>::KERNEL.to_string(),
        c: model.c,
        w: model.w.clone(),
        b: model.b,
        scaler: model.scaler.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("model serialises");
    s.push('\n');
    s
}

pub fn save_knn<T: Scalar>(model: &KnnModel<T>) -> String {
    let doc = KnnDocument {
        schema: MODEL_SCHEMA.to_string(),
        model: "knn".to_string(),
        k: model.k,
        scaler: model.scaler.clone(),
        exemplars: model.exemplars.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("model serialises");
    s.push('\n');
    s
}

fn check_header(text: &str, kind: &str) -> Result<Value, ClassifierError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ClassifierError::MalformedDocument(e.to_string()))?;
    let schema = value
        .get("schema")
        .and_then(Value::as_str)
        .ok_or_else(|| ClassifierError::MalformedDocument("missing \"schema\"".into()))?;
    if schema != MODEL_SCHEMA {
        return Err(ClassifierError::SchemaVersionMismatch {
            found: schema.to_string(),
        });
    }
    match value.get("model").and_then(Value::as_str) {
        Some(k) if k == kind => Ok(value),
        Some(other) => Err(ClassifierError::MalformedDocument(format!(
            "expected a {kind} model, found {other:?}"
        ))),
        None => Err(ClassifierError::MalformedDocument("missing \"model\"".into())),
    }
}

pub fn load_svm<T: Scalar>(text: &str) -> Result<SvmModel<T>, ClassifierError> {
    let value = check_header(text, "svm")?;
    let doc: SvmDocument<T> =
        serde_json::from_value(value).map_err(|e| ClassifierError::MalformedDocument(e.to_string()))?;
    if doc.kernel != SvmModel::<T>::KERNEL {
        return Err(ClassifierError::MalformedDocument(format!(
            "unsupported kernel {:?}",
            doc.kernel
        )));
    }
    let model = SvmModel {
        w: doc.w,
        b: doc.b,
        c: doc.c,
        scaler: doc.scaler,
    };
    model.validate()?;
    Ok(model)
}

pub fn load_knn<T: Scalar>(text: &str) -> Result<KnnModel<T>, ClassifierError> {
    let value = check_header(text, "knn")?;
    let doc: KnnDocument<T> =
        serde_json::from_value(value).map_err(|e| ClassifierError::MalformedDocument(e.to_string()))?;
    let model = KnnModel {
        k: doc.k,
        scaler: doc.scaler,
        exemplars: doc.exemplars,
    };
    model.validate()?;
    Ok(model)
}
