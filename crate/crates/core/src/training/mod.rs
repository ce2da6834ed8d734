//! One-step training with teacher forcing: every input is a ground-truth
//! frame and every target the frame that follows it.

mod checkpoint;
mod optim;

pub use checkpoint::{Checkpoint, RngAlgorithm, RngState};
pub use optim::{adamw_update, clip_by_value, cosine_lr, AdamState};

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{AutodiffError, Tape, Tensor};
use crate::dataset::{apply_normalization, compute_norm_stats, DatasetError, NormStats, TrajectoryDataset};
use crate::ffno::{build_input_channels, FfnoConfig, FfnoError, FfnoModel, FrameContext, InputOptions};
use crate::spectral::RealField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    #[serde(default = "d_warmup")]
    pub warmup_steps: usize,
    #[serde(default = "d_lr")]
    pub peak_lr: f64,
    #[serde(default = "d_betas")]
    pub betas: [f64; 2],
    #[serde(default = "d_eps")]
    pub eps: f64,
    #[serde(default = "d_wd")]
    pub weight_decay: f64,
    #[serde(default = "d_clip")]
    pub grad_clip_value: f64,
    #[serde(default = "d_noise")]
    pub noise_std: f64,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    pub seed: u64,
}

fn d_warmup() -> usize {
    500
}
fn d_lr() -> f64 {
    2.5e-3
}
fn d_betas() -> [f64; 2] {
    [0.9, 0.999]
}
fn d_eps() -> f64 {
    1e-8
}
fn d_wd() -> f64 {
    1e-4
}
fn d_clip() -> f64 {
    0.1
}
fn d_noise() -> f64 {
    1e-2
}
fn d_batch() -> usize {
    8
}

impl TrainConfig {
    pub fn new(steps: usize, seed: u64) -> Self {
        Self {
            steps,
            warmup_steps: d_warmup(),
            peak_lr: d_lr(),
            betas: d_betas(),
            eps: d_eps(),
            weight_decay: d_wd(),
            grad_clip_value: d_clip(),
            noise_std: d_noise(),
            batch_size: d_batch(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if self.warmup_steps >= self.steps {
            return bad(format!("warmup_steps = {} must be below steps = {}", self.warmup_steps, self.steps));
        }
        for (name, v) in [("peak_lr", self.peak_lr), ("eps", self.eps), ("grad_clip_value", self.grad_clip_value)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} = {v} must be > 0"));
            }
        }
        for (name, v) in [("weight_decay", self.weight_decay), ("noise_std", self.noise_std)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} = {v} must be >= 0"));
            }
        }
        if !self.betas.iter().all(|b| (0.0..1.0).contains(b)) {
            return bad(format!("betas {:?} must lie in [0, 1)", self.betas));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] FfnoError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

/// A training example: frame `t` of `trajectory` and its successor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pair {
    pub trajectory: usize,
    pub t: usize,
}

/// All consecutive-frame pairs, trajectory by trajectory.
pub fn make_training_pairs(ds: &TrajectoryDataset) -> Vec<Pair> {
    (0..ds.len()).flat_map(|n| (0..ds.frames - 1).map(move |t| Pair { trajectory: n, t })).collect()
}

/// Pair order of one epoch, a seeded permutation.
pub fn shuffled_pairs(pairs: &[Pair], seed: u64, epoch: u64) -> Vec<Pair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    let mut out = pairs.to_vec();
    out.shuffle(&mut rng);
    out
}

/// The pairs of training step `step`: consecutive slices of the concatenated
/// epoch permutations, so the batch depends only on `(seed, step)`.
pub fn batch_for_step(pairs: &[Pair], batch_size: usize, seed: u64, step: usize) -> Vec<Pair> {
    let n = pairs.len();
    let start = step * batch_size;
    let mut out = Vec::with_capacity(batch_size);
    let mut cached: Option<(usize, Vec<Pair>)> = None;
    for pos in start..start + batch_size {
        let epoch = pos / n;
        if cached.as_ref().map(|c| c.0) != Some(epoch) {
            cached = Some((epoch, shuffled_pairs(pairs, seed, epoch as u64)));
        }
        out.push(cached.as_ref().expect("set above").1[pos % n]);
    }
    out
}

/// Source of Gaussian input noise for one step, independent of thread order.
fn noise_rng(seed: u64, step: usize, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f_6973_65);
    rng.set_stream(((step as u64) << 16) | sample as u64);
    rng
}

/// The train split with its pairs and input statistics.
#[derive(Debug, Clone)]
pub struct TrainingData<'a> {
    pub dataset: &'a TrajectoryDataset,
    pub pairs: Vec<Pair>,
    pub inputs: InputOptions,
    pub norm: NormStats,
}

impl<'a> TrainingData<'a> {
    pub fn new(dataset: &'a TrajectoryDataset, inputs: InputOptions) -> Result<Self, TrainError> {
        let norm = compute_norm_stats(dataset, &inputs)?;
        Ok(Self { dataset, pairs: make_training_pairs(dataset), inputs, norm })
    }

    /// Normalized input channels and raw target of one pair.
    fn example(&self, p: Pair) -> Result<(Tensor, Tensor), TrainError> {
        let ds = self.dataset;
        let meta = &ds.trajectories[p.trajectory];
        let ctx = FrameContext { nu: meta.viscosity, forcing: &meta.forcing, t: ds.frame_time(p.t) };
        let input = build_input_channels(&ds.frame_field(p.trajectory, p.t), &self.inputs, &ctx);
        let input = apply_normalization(&input, &self.norm)?;
        let target: Vec<f64> = ds.frame(p.trajectory, p.t + 1).iter().map(|&v| v as f64).collect();
        let target = Tensor::new(vec![1, ds.grid.ny(), ds.grid.nx()], target)?;
        Ok((input, target))
    }
}

/// Loss and gradients of one example: the normalized error of the
/// de-normalized prediction against the raw next frame.
fn example_gradients(model: &FfnoModel, norm: &NormStats, input: Tensor, target: Tensor) -> Result<(f64, Vec<Tensor>), TrainError> {
    let mut tape = Tape::new();
    let vars = model.record(&mut tape, true);
    let x = tape.constant(input);
    let y = model.forward_on(&mut tape, &vars, x)?;
    let (mean, std) = norm.vorticity();
    let pred = tape.affine_scalar(y, std, mean);
    let t = tape.constant(target);
    let loss = tape.mse_norm(pred, t)?;
    let mut grads = tape.backward(loss)?;
    let g = vars
        .0
        .iter()
        .zip(model.params())
        .map(|(v, p)| grads.take(*v).unwrap_or_else(|| Tensor::zeros(p.shape())))
        .collect();
    Ok((tape.value(loss).item(), g))
}

/// Batch-mean loss and gradients, without touching the weights. Inputs get
/// `N(0, noise_std^2)` noise after normalization.
pub fn batch_gradients(
    model: &FfnoModel,
    data: &TrainingData<'_>,
    batch: &[Pair],
    cfg: &TrainConfig,
    step: usize,
) -> Result<(f64, Vec<Tensor>), TrainError> {
    let noise = Normal::new(0.0, cfg.noise_std).map_err(|e| TrainError::Config(e.to_string()))?;
    let per_sample: Vec<(f64, Vec<Tensor>)> = batch
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let (mut input, target) = data.example(p)?;
            if cfg.noise_std > 0.0 {
                let mut rng = noise_rng(cfg.seed, step, i);
                input.data_mut().iter_mut().for_each(|v| *v += noise.sample(&mut rng));
            }
            example_gradients(model, &data.norm, input, target)
        })
        .collect::<Result<_, _>>()?;
    // summed in batch order so the result does not depend on scheduling
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut total: Vec<Tensor> = model.params().iter().map(|p| Tensor::zeros(p.shape())).collect();
    for (l, g) in &per_sample {
        loss += l;
        for (acc, gi) in total.iter_mut().zip(g) {
            acc.axpy(scale, gi);
        }
    }
    Ok((loss * scale, total))
}

/// One optimizer step at 0-based `step`; returns the batch loss.
pub fn train_step(
    model: &mut FfnoModel,
    state: &mut AdamState,
    data: &TrainingData<'_>,
    batch: &[Pair],
    cfg: &TrainConfig,
    step: usize,
) -> Result<f64, TrainError> {
    let (loss, mut grads) = batch_gradients(model, data, batch, cfg, step)?;
    if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
        return Err(TrainError::NonFiniteLoss { step });
    }
    clip_by_value(&mut grads, cfg.grad_clip_value);
    let lr = cosine_lr(step, cfg);
    adamw_update(model.params_mut(), &grads, state, cfg, step, lr);
    Ok(loss)
}

/// Progress record emitted after every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
    pub wall_time: f64,
}

/// Runs steps `ckpt.step .. until` (capped at `cfg.steps`) and returns the
/// advanced checkpoint.
pub fn train(
    mut ckpt: Checkpoint,
    dataset: &TrajectoryDataset,
    until: usize,
    mut on_step: impl FnMut(&StepRecord),
) -> Result<Checkpoint, TrainError> {
    ckpt.train.validate()?;
    let data = TrainingData { dataset, pairs: make_training_pairs(dataset), inputs: ckpt.model.config().inputs, norm: ckpt.norm.clone() };
    let start = Instant::now();
    let cfg = ckpt.train.clone();
    for step in ckpt.step..until.min(cfg.steps) {
        let batch = batch_for_step(&data.pairs, cfg.batch_size, cfg.seed, step);
        let loss = train_step(&mut ckpt.model, &mut ckpt.optimizer, &data, &batch, &cfg, step)?;
        ckpt.step = step + 1;
        on_step(&StepRecord { step, lr: cosine_lr(step, &cfg), loss, wall_time: start.elapsed().as_secs_f64() });
    }
    Ok(ckpt)
}

/// A fresh run: weights drawn from a stream of `train.seed` that batching
/// and input noise never touch, and statistics of the train split.
pub fn init_checkpoint(model: FfnoConfig, train: TrainConfig, dataset: &TrajectoryDataset) -> Result<Checkpoint, TrainError> {
    train.validate()?;
    let norm = compute_norm_stats(dataset, &model.inputs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed ^ 0x696e_6974);
    rng.set_stream(u64::MAX);
    let model = FfnoModel::init(model, &mut rng)?;
    model.check_grid(dataset.grid.ny(), dataset.grid.nx())?;
    Ok(Checkpoint::new(model, norm, train))
}

/// Noise-free one-step prediction of the next vorticity frame.
pub fn predict_next(model: &FfnoModel, norm: &NormStats, omega: &RealField, ctx: &FrameContext<'_>) -> Result<RealField, TrainError> {
    let input = build_input_channels(omega, &model.config().inputs, ctx);
    let input = apply_normalization(&input, norm)?;
    let y = crate::ffno::model_forward(&input, model)?;
    let (mean, std) = norm.vorticity();
    let values = y.data().iter().map(|v| v * std + mean).collect();
    RealField::new(*omega.grid(), values).map_err(|e| TrainError::Model(FfnoError::Input(e.to_string())))
}

#[cfg(test)]
mod tests;
