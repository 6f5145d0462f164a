//! Versioned JSON model documents.
//!
//! Floats are written in shortest round-trip decimal form, so decoding
//! reproduces every weight bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{FenArchitecture, FenModel};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    version: u64,
    architecture: FenArchitecture,
    trained_epochs: usize,
    rng_seed: u64,
    weight_order: Vec<String>,
    weights: Vec<Vec<f64>>,
    buffer_order: Vec<String>,
    buffers: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    provenance: BTreeMap<String, String>,
}

impl FenModel {
    pub fn to_json(&self) -> String {
        let (weight_order, weights) = self.parameters().into_iter().map(|(n, t)| (n, t.data.clone())).unzip();
        let (buffer_order, buffers) = self.buffers().into_iter().map(|(n, t)| (n, t.data.clone())).unzip();
        let doc = ModelDocument {
            version: MODEL_FORMAT_VERSION,
            architecture: self.arch.clone(),
            trained_epochs: self.trained_epochs,
            rng_seed: self.rng_seed,
            weight_order,
            weights,
            buffer_order,
            buffers,
            provenance: self.provenance.clone(),
        };
        serde_json::to_string(&doc).expect("model document serializes")
    }

    /// Decodes and validates a model document.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(MODEL_FORMAT_VERSION) => {}
            Some(found) => return Err(Error::VersionMismatch { found, supported: MODEL_FORMAT_VERSION }),
            None => return Err(Error::CorruptModel("missing or invalid version field".into())),
        }
        let doc: ModelDocument = serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))?;
        doc.architecture.validate().map_err(|e| Error::CorruptModel(e.to_string()))?;
        let params = collect(&doc.architecture.parameter_layout(), doc.weight_order, doc.weights)?;
        let buffers = collect(&doc.architecture.buffer_layout(), doc.buffer_order, doc.buffers)?;
        Ok(FenModel {
            arch: doc.architecture,
            params,
            buffers,
            trained_epochs: doc.trained_epochs,
            rng_seed: doc.rng_seed,
            provenance: doc.provenance,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn collect(layout: &[(String, Vec<usize>)], names: Vec<String>, arrays: Vec<Vec<f64>>) -> Result<Vec<Tensor>> {
    if names.len() != layout.len() || arrays.len() != layout.len() {
        return Err(Error::CorruptModel(format!(
            "expected {} tensors, found {} names and {} arrays",
            layout.len(),
            names.len(),
            arrays.len()
        )));
    }
    layout
        .iter()
        .zip(names)
        .zip(arrays)
        .map(|(((expected, shape), name), data)| {
            if *expected != name {
                return Err(Error::CorruptModel(format!("expected tensor `{expected}`, found `{name}`")));
            }
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::CorruptModel(format!("non-finite value in `{name}`")));
            }
            Tensor::new(shape.clone(), data).map_err(|e| Error::CorruptModel(format!("{name}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::GrayImage;

    fn model() -> FenModel {
        FenModel::new(FenArchitecture { blocks: 1, width: 4, stem_stride: 2, feature_dim: 8, classes: 4 }, 4).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let m = model();
        let back = FenModel::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
        let img = GrayImage::new(5, (0..25).map(|i| f64::from(i) / 24.0).collect(), (0.0, 1.0)).unwrap();
        let (a, b) = (m.forward(&img).unwrap(), back.forward(&img).unwrap());
        assert!(a.logits.iter().zip(&b.logits).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn truncated_is_corrupt() {
        let json = model().to_json();
        assert!(matches!(FenModel::from_json(&json[..json.len() / 2]), Err(Error::CorruptModel(_))));
        assert!(matches!(FenModel::from_json(""), Err(Error::CorruptModel(_))));
    }

    #[test]
    fn wrong_version() {
        let json = model().to_json().replacen("\"version\":1", "\"version\":7", 1);
        assert!(matches!(FenModel::from_json(&json), Err(Error::VersionMismatch { found: 7, .. })));
    }

    #[test]
    fn wrong_shape_is_corrupt() {
        let mut doc: serde_json::Value = serde_json::from_str(&model().to_json()).unwrap();
        doc["weights"][0].as_array_mut().unwrap().pop();
        assert!(matches!(FenModel::from_json(&doc.to_string()), Err(Error::CorruptModel(_))));
    }
}
