//! Trajectory datasets: generation from the solver, spectral downsampling,
//! per-channel normalization, and the `FFNODS1` container.

mod format;
mod generate;
mod norm;
mod resample;

pub use format::{from_bytes, load, save, to_bytes, DATASET_MAGIC};
pub use generate::{
    generate_splits, generate_trajectories, random_initial_field, GenerationConfig, Preset, SplitDatasets,
};
pub use norm::{apply_normalization, compute_norm_stats, invert_normalization, NormStats};
pub use resample::{downsample, resample_spectrum, truncate_field};

use serde::{Deserialize, Serialize};

use crate::container::FormatError;
use crate::solver::{ForcingSpec, SolverError};
use crate::spectral::{Grid2, RealField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            Split::Train => 1,
            Split::Valid => 2,
            Split::Test => 3,
        }
    }
}

/// Physical parameters of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryMeta {
    pub viscosity: f64,
    pub forcing: ForcingSpec,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("trajectory {trajectory}: {source}")]
    Generation {
        trajectory: usize,
        #[source]
        source: SolverError,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("downsample factor {factor} does not divide grid {nx}x{ny}")]
    Factor { factor: usize, nx: usize, ny: usize },
    #[error("channel {name:?} has zero variance")]
    ConstantChannel { name: String },
    #[error("normalization statistics must come from the train split, got {0:?}")]
    WrongSplit(Split),
}

/// `N` trajectories of `T` recorded vorticity frames on one grid, stored as
/// `f32` in `[N][T][ny][nx]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    pub grid: Grid2,
    pub record_dt: f64,
    /// Simulation time of frame 0.
    pub start_time: f64,
    pub split: Split,
    pub seed: u64,
    pub trajectories: Vec<TrajectoryMeta>,
    pub frames: usize,
    pub vorticity: Vec<f32>,
    /// Generation settings, echoed verbatim into the file header.
    pub provenance: serde_json::Value,
}

impl TrajectoryDataset {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.len(), self.frames, self.grid.ny(), self.grid.nx()]
    }

    pub fn frame(&self, trajectory: usize, t: usize) -> &[f32] {
        let n = self.grid.len();
        let start = (trajectory * self.frames + t) * n;
        &self.vorticity[start..start + n]
    }

    pub fn frame_field(&self, trajectory: usize, t: usize) -> RealField {
        let values = self.frame(trajectory, t).iter().map(|&v| v as f64).collect();
        RealField::new(self.grid, values).expect("stored frames are finite")
    }

    pub fn frame_time(&self, t: usize) -> f64 {
        self.start_time + t as f64 * self.record_dt
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.frames < 2 {
            return Err(DatasetError::Invalid(format!("need at least 2 frames, found {}", self.frames)));
        }
        if !(self.record_dt.is_finite() && self.record_dt > 0.0) {
            return Err(DatasetError::Invalid(format!("record_dt = {} must be > 0", self.record_dt)));
        }
        let expected = self.len() * self.frames * self.grid.len();
        if self.vorticity.len() != expected {
            return Err(DatasetError::Invalid(format!(
                "vorticity holds {} values, shape {:?} needs {expected}",
                self.vorticity.len(),
                self.shape()
            )));
        }
        if let Some(i) = self.vorticity.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::Invalid(format!("non-finite vorticity at flat index {i}")));
        }
        for (i, m) in self.trajectories.iter().enumerate() {
            if !(m.viscosity.is_finite() && m.viscosity > 0.0) {
                return Err(DatasetError::Invalid(format!("trajectory {i}: viscosity {} must be > 0", m.viscosity)));
            }
        }
        Ok(())
    }
}
