use std::path::Path;

use serde_json::{Map, Value};

use super::{FfnoConfig, FfnoError, FfnoModel};
use crate::autodiff::Tensor;
use crate::container::{self, ArrayValues, Container, FormatError, NamedArray};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FFNOCK1\0";

/// Header entry and parameter arrays describing `model`. Arrays are named
/// `param.<name>`.
pub fn model_entries(model: &FfnoModel) -> (Value, Vec<NamedArray>) {
    let arrays = model
        .names()
        .iter()
        .zip(model.params())
        .map(|(n, t)| NamedArray {
            name: format!("param.{n}"),
            shape: t.shape().to_vec(),
            values: ArrayValues::F64(t.data().to_vec()),
        })
        .collect();
    (serde_json::to_value(model.config()).expect("config serializes"), arrays)
}

pub(crate) fn tensor_from_array(a: NamedArray) -> Result<Tensor, FfnoError> {
    let ArrayValues::F64(v) = a.values else {
        return Err(FormatError::Header(format!("array {:?} must be f64", a.name)).into());
    };
    Tensor::new(a.shape, v).map_err(|e| FfnoError::Config(format!("array {:?}: {e}", a.name)))
}

/// Rebuilds the model stored in a decoded checkpoint, taking its `param.*` arrays.
pub fn model_from_container(c: &mut Container) -> Result<FfnoModel, FfnoError> {
    let config: FfnoConfig = c.field("model")?;
    let mut named = Vec::new();
    let mut rest = Vec::new();
    for a in std::mem::take(&mut c.arrays) {
        match a.name.strip_prefix("param.") {
            Some(n) => named.push((n.to_string(), tensor_from_array(a)?)),
            None => rest.push(a),
        }
    }
    c.arrays = rest;
    FfnoModel::from_parameters(config, named)
}

pub fn model_to_bytes(model: &FfnoModel, extra: Map<String, Value>) -> Result<Vec<u8>, FfnoError> {
    let (cfg, arrays) = model_entries(model);
    let mut meta = extra;
    meta.insert("model".into(), cfg);
    Ok(container::encode(CHECKPOINT_MAGIC, &meta, &arrays)?)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<FfnoModel, FfnoError> {
    let mut c = container::decode(CHECKPOINT_MAGIC, bytes)?;
    model_from_container(&mut c)
}

pub fn save_model(model: &FfnoModel, path: &Path) -> Result<(), FfnoError> {
    Ok(container::write_atomic(path, &model_to_bytes(model, Map::new())?)?)
}

pub fn load_model(path: &Path) -> Result<FfnoModel, FfnoError> {
    let bytes = std::fs::read(path).map_err(FormatError::Io)?;
    model_from_bytes(&bytes)
}
