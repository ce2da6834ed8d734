use serde::{Deserialize, Serialize};

use super::{DatasetError, Split, TrajectoryDataset};
use crate::autodiff::Tensor;
use crate::ffno::{build_input_channels, FrameContext, InputOptions};

/// Per-channel z-score statistics of the operator inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormStats {
    pub channels: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn new(channels: Vec<String>, mean: Vec<f64>, std: Vec<f64>) -> Result<Self, DatasetError> {
        if channels.len() != mean.len() || mean.len() != std.len() {
            return Err(DatasetError::Invalid("norm stats: channel, mean and std lengths differ".into()));
        }
        for (i, (&m, &s)) in mean.iter().zip(&std).enumerate() {
            if !m.is_finite() || !(s.is_finite() && s > 0.0) {
                return Err(DatasetError::ConstantChannel { name: channels[i].clone() });
            }
        }
        Ok(Self { channels, mean, std })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Statistics of channel 0, used to map normalized predictions back to vorticity.
    pub fn vorticity(&self) -> (f64, f64) {
        (self.mean[0], self.std[0])
    }

    fn check(&self, t: &Tensor) -> Result<usize, DatasetError> {
        match t.shape() {
            [c, ..] if *c == self.len() && t.shape().len() == 3 => Ok(t.len() / c),
            s => Err(DatasetError::Invalid(format!("expected [{}, ny, nx] input, got {s:?}", self.len()))),
        }
    }
}

/// Mean and (population) standard deviation of every input channel over all
/// input frames (`0..T-1`) of the train split.
pub fn compute_norm_stats(ds: &TrajectoryDataset, opts: &InputOptions) -> Result<NormStats, DatasetError> {
    if ds.split != Split::Train {
        return Err(DatasetError::WrongSplit(ds.split));
    }
    let c = opts.channel_count();
    let mut sum = vec![0.0f64; c];
    let mut sum_sq = vec![0.0f64; c];
    let mut count = 0usize;
    let plane = ds.grid.len();
    let mut totals = |input: &Tensor| {
        for (ch, vals) in input.data().chunks_exact(plane).enumerate() {
            sum[ch] += vals.iter().sum::<f64>();
            sum_sq[ch] += vals.iter().map(|v| v * v).sum::<f64>();
        }
    };
    for (n, meta) in ds.trajectories.iter().enumerate() {
        for t in 0..ds.frames.saturating_sub(1) {
            let ctx = FrameContext { nu: meta.viscosity, forcing: &meta.forcing, t: ds.frame_time(t) };
            totals(&build_input_channels(&ds.frame_field(n, t), opts, &ctx));
            count += plane;
        }
    }
    if count == 0 {
        return Err(DatasetError::Invalid("no input frames".into()));
    }
    let names: Vec<String> = opts.channel_names().into_iter().map(String::from).collect();
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let std = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| {
            let var = sq / count as f64 - m * m;
            // relative floor so a constant channel reads as exactly zero variance
            if var <= 1e-12 * m * m { 0.0 } else { var.sqrt() }
        })
        .collect();
    NormStats::new(names, mean, std)
}

pub fn apply_normalization(input: &Tensor, stats: &NormStats) -> Result<Tensor, DatasetError> {
    let plane = stats.check(input)?;
    let mut out = input.clone();
    for (ch, vals) in out.data_mut().chunks_exact_mut(plane).enumerate() {
        let (m, s) = (stats.mean[ch], stats.std[ch]);
        vals.iter_mut().for_each(|v| *v = (*v - m) / s);
    }
    Ok(out)
}

pub fn invert_normalization(input: &Tensor, stats: &NormStats) -> Result<Tensor, DatasetError> {
    let plane = stats.check(input)?;
    let mut out = input.clone();
    for (ch, vals) in out.data_mut().chunks_exact_mut(plane).enumerate() {
        let (m, s) = (stats.mean[ch], stats.std[ch]);
        vals.iter_mut().for_each(|v| *v = *v * s + m);
    }
    Ok(out)
}
