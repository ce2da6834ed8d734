use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{AdamState, TrainConfig, TrainError};
use crate::autodiff::Tensor;
use crate::container::{self, ArrayValues, FormatError, NamedArray};
use crate::dataset::NormStats;
use crate::ffno::{self, FfnoModel, CHECKPOINT_MAGIC};

/// Random streams are keyed by `(seed, step)`, so the seed and the next step
/// are the complete generator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngState {
    pub algorithm: RngAlgorithm,
    pub seed: u64,
    pub next_step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RngAlgorithm {
    Chacha8,
}

/// Everything needed to continue a run bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: FfnoModel,
    pub optimizer: AdamState,
    /// Completed optimizer steps.
    pub step: usize,
    pub norm: NormStats,
    pub train: TrainConfig,
}

impl Checkpoint {
    pub fn new(model: FfnoModel, norm: NormStats, train: TrainConfig) -> Self {
        let optimizer = AdamState::zeros_like(model.params());
        Self { model, optimizer, step: 0, norm, train }
    }

    pub fn rng_state(&self) -> RngState {
        RngState { algorithm: RngAlgorithm::Chacha8, seed: self.train.seed, next_step: self.step }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, TrainError> {
        let (cfg, mut arrays) = ffno::model_entries(&self.model);
        for (kind, moments) in [("m", &self.optimizer.m), ("v", &self.optimizer.v)] {
            for (name, t) in self.model.names().iter().zip(moments) {
                arrays.push(NamedArray {
                    name: format!("adam.{kind}.{name}"),
                    shape: t.shape().to_vec(),
                    values: ArrayValues::F64(t.data().to_vec()),
                });
            }
        }
        let mut meta = Map::new();
        meta.insert("model".into(), cfg);
        meta.insert("step".into(), Value::from(self.step as u64));
        meta.insert("norm".into(), serde_json::to_value(&self.norm).expect("norm serializes"));
        meta.insert("train".into(), serde_json::to_value(&self.train).expect("config serializes"));
        meta.insert("rng".into(), serde_json::to_value(self.rng_state()).expect("rng serializes"));
        Ok(container::encode(CHECKPOINT_MAGIC, &meta, &arrays).map_err(ffno::FfnoError::from)?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TrainError> {
        let mut c = container::decode(CHECKPOINT_MAGIC, bytes).map_err(ffno::FfnoError::from)?;
        let header = |e: FormatError| TrainError::Model(e.into());
        let model = ffno::model_from_container(&mut c)?;
        let step: usize = c.field("step").map_err(header)?;
        let norm: NormStats = c.field("norm").map_err(header)?;
        let train: TrainConfig = c.field("train").map_err(header)?;
        let rng: RngState = c.field("rng").map_err(header)?;
        if rng.seed != train.seed || rng.next_step != step {
            return Err(header(FormatError::Header("rng state disagrees with step/seed".into())));
        }
        if norm.len() != model.config().in_channels() {
            return Err(header(FormatError::Header("norm stats do not match model inputs".into())));
        }
        let mut moments = |kind: &str| -> Result<Vec<Tensor>, TrainError> {
            model
                .names()
                .iter()
                .zip(model.params())
                .map(|(name, p)| {
                    let t = ffno::tensor_from_array(c.take_array(&format!("adam.{kind}.{name}")).map_err(header)?)?;
                    if t.shape() != p.shape() {
                        return Err(header(FormatError::Header(format!("adam.{kind}.{name}: shape mismatch"))));
                    }
                    Ok(t)
                })
                .collect()
        };
        let optimizer = AdamState { m: moments("m")?, v: moments("v")? };
        Ok(Self { model, optimizer, step, norm, train })
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        container::write_atomic(path, &self.to_bytes()?).map_err(|e| TrainError::Model(e.into()))
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let bytes = std::fs::read(path).map_err(|e| TrainError::Model(FormatError::Io(e).into()))?;
        Self::from_bytes(&bytes)
    }
}
