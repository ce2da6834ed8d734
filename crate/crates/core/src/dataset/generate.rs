use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{downsample, DatasetError, Split, TrajectoryDataset, TrajectoryMeta};
use crate::solver::{ForcingAmplitudes, ForcingKind, ForcingSpec, Scheme, Solver, SolverConfig, SolverState};
use crate::spectral::{
    fft2_forward_unchecked, fft2_inverse_unchecked, velocity_from_vorticity, Grid2, RealField,
};

/// Everything needed to produce the train/valid/test datasets of one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    /// Solver settings; `nu` is ignored when `viscosity_range` is set, and
    /// missing `torus_random` amplitudes are sampled per trajectory.
    pub solver: SolverConfig,
    /// Log-uniform viscosity range `[min, max)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscosity_range: Option<[f64; 2]>,
    /// Recorded frames per trajectory.
    pub frames: usize,
    /// Simulated time between frames; an integer multiple of `solver.dt`.
    pub record_dt: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    /// Peak radial wavenumber (cycles per domain) of the initial spectrum.
    #[serde(default = "default_peak")]
    pub peak_wavenumber: f64,
    /// Spectral downsampling factor applied to recorded frames.
    #[serde(default = "default_factor")]
    pub downsample: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub seed: u64,
}

fn default_burn_in() -> f64 {
    3.0
}

fn default_peak() -> f64 {
    4.0
}

fn default_factor() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    TorusLi,
    TorusKochkov,
    TorusV,
    TorusVf,
}

impl Preset {
    pub fn parse(name: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::from(name)).ok()
    }
}

impl GenerationConfig {
    /// Desk-scale version of a torus dataset family: 64x64 frames, 32/4/4 trajectories.
    pub fn preset(preset: Preset, seed: u64) -> Self {
        let unit = Grid2::unit(64).expect("valid grid");
        let (solver, viscosity_range, record_dt) = match preset {
            Preset::TorusLi => (SolverConfig::new(unit, 1e-5, ForcingSpec::torus_li(), Scheme::Cnab2, 2.5e-3), None, 1.0),
            Preset::TorusKochkov => (
                SolverConfig::new(Grid2::two_pi(64).expect("valid grid"), 1e-3, ForcingSpec::kochkov_cos(0.1), Scheme::Ck5Imex, 5e-3),
                None,
                0.2,
            ),
            Preset::TorusV | Preset::TorusVf => {
                let shift = if preset == Preset::TorusVf { 0.2 } else { 0.0 };
                let forcing = ForcingSpec { kind: ForcingKind::TorusRandom, drag: 0.0, amplitudes: None, shift_rate: shift };
                (SolverConfig::new(unit, 1e-4, forcing, Scheme::Cnab2, 2.5e-3), Some([1e-5, 1e-4]), 1.0)
            }
        };
        Self {
            solver,
            viscosity_range,
            frames: 20,
            record_dt,
            burn_in: default_burn_in(),
            peak_wavenumber: default_peak(),
            downsample: 1,
            train: 32,
            valid: 4,
            test: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::Config(m));
        if self.frames < 2 {
            return bad(format!("frames = {} must be >= 2", self.frames));
        }
        if !(self.burn_in.is_finite() && self.burn_in >= 0.0) {
            return bad(format!("burn_in = {} must be >= 0", self.burn_in));
        }
        if !(self.peak_wavenumber.is_finite() && self.peak_wavenumber > 0.0) {
            return bad(format!("peak_wavenumber = {} must be > 0", self.peak_wavenumber));
        }
        if let Some([lo, hi]) = self.viscosity_range {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return bad(format!("viscosity_range [{lo}, {hi}) must satisfy 0 < min < max"));
            }
        }
        let (nx, ny) = (self.solver.grid.nx(), self.solver.grid.ny());
        if self.downsample == 0 || nx % self.downsample != 0 || ny % self.downsample != 0 {
            return Err(DatasetError::Factor { factor: self.downsample, nx, ny });
        }
        let mut probe = self.solver.clone();
        if probe.forcing.kind == ForcingKind::TorusRandom && probe.forcing.amplitudes.is_none() {
            probe.forcing.amplitudes = Some(ForcingAmplitudes { alpha: [[[0.0; 2]; 2]; 2], beta: [[[0.0; 2]; 2]; 2] });
        }
        let solver = Solver::new(probe)?;
        solver.steps_for(self.record_dt).map_err(|e| DatasetError::Config(format!("record_dt: {e}")))?;
        solver.steps_for(self.burn_in).map_err(|e| DatasetError::Config(format!("burn_in: {e}")))?;
        Ok(())
    }

    pub fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Valid => self.valid,
            Split::Test => self.test,
        }
    }

    fn trajectory_rng(&self, split: Split, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((split.stream_tag() << 40) | index as u64);
        rng
    }
}

/// Zero-mean Gaussian random field with radial envelope `k exp(-k^2 / k0^2)`
/// (`k` in cycles per domain), scaled to unit maximum speed.
pub fn random_initial_field<R: Rng + ?Sized>(grid: &Grid2, peak_wavenumber: f64, rng: &mut R) -> RealField {
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
    let noise = RealField::new(*grid, noise).expect("finite noise");
    let (nyq_col, nyq_row) = (grid.nx() / 2, grid.ny() / 2);
    let (lx, ly) = (grid.lx(), grid.ly());
    let shaped = fft2_forward_unchecked(&noise).map_modes(|kx, ky, col, row| {
        if col == nyq_col || row == nyq_row {
            return num_complex::Complex64::new(0.0, 0.0);
        }
        let k = ((kx * lx).powi(2) + (ky * ly).powi(2)).sqrt();
        num_complex::Complex64::new(k * (-(k * k) / (peak_wavenumber * peak_wavenumber)).exp(), 0.0)
    });
    let speed = velocity_from_vorticity(&shaped).max_speed();
    let field = fft2_inverse_unchecked(&shaped);
    if speed == 0.0 {
        return field;
    }
    let values = field.values().iter().map(|v| v / speed).collect();
    RealField::new(*grid, values).expect("finite field")
}

fn run_trajectory(cfg: &GenerationConfig, split: Split, index: usize) -> Result<(TrajectoryMeta, Vec<f32>), DatasetError> {
    let mut rng = cfg.trajectory_rng(split, index);
    let mut solver_cfg = cfg.solver.clone();
    if let Some([lo, hi]) = cfg.viscosity_range {
        let u: f64 = rng.random();
        solver_cfg.nu = (lo.ln() + u * (hi.ln() - lo.ln())).exp();
    }
    if solver_cfg.forcing.kind == ForcingKind::TorusRandom && solver_cfg.forcing.amplitudes.is_none() {
        solver_cfg.forcing.amplitudes = Some(ForcingAmplitudes::sample(&mut rng));
    }
    let grid = solver_cfg.grid;
    let omega0 = random_initial_field(&grid, cfg.peak_wavenumber, &mut rng);
    let meta = TrajectoryMeta { viscosity: solver_cfg.nu, forcing: solver_cfg.forcing.clone() };

    let solver = Solver::new(solver_cfg)?;
    let stride = solver.steps_for(cfg.record_dt)?;
    let burn = solver.steps_for(cfg.burn_in)?;
    let fail = |source| DatasetError::Generation { trajectory: index, source };

    let mut state = solver.advance(&SolverState::new(fft2_forward_unchecked(&omega0), 0.0), burn).map_err(fail)?;
    let mut frames = Vec::with_capacity(cfg.frames * grid.len());
    for f in 0..cfg.frames {
        if f > 0 {
            state = solver.advance(&state, stride).map_err(fail)?;
        }
        frames.extend(fft2_inverse_unchecked(&state.omega_hat).values().iter().map(|&v| v as f32));
    }
    Ok((meta, frames))
}

/// Simulates `cfg.count(split)` trajectories of one split. Each trajectory
/// draws from its own ChaCha stream keyed by `(seed, split, index)`, so
/// splits never share initial conditions and results do not depend on thread
/// scheduling.
pub fn generate_trajectories(cfg: &GenerationConfig, split: Split) -> Result<TrajectoryDataset, DatasetError> {
    cfg.validate()?;
    let results: Vec<_> = (0..cfg.count(split))
        .into_par_iter()
        .map(|i| run_trajectory(cfg, split, i))
        .collect::<Result<_, _>>()?;
    let mut trajectories = Vec::with_capacity(results.len());
    let mut vorticity = Vec::with_capacity(results.len() * cfg.frames * cfg.solver.grid.len());
    for (meta, frames) in results {
        trajectories.push(meta);
        vorticity.extend(frames);
    }
    let ds = TrajectoryDataset {
        grid: cfg.solver.grid,
        record_dt: cfg.record_dt,
        start_time: cfg.burn_in,
        split,
        seed: cfg.seed,
        trajectories,
        frames: cfg.frames,
        vorticity,
        provenance: serde_json::to_value(cfg).expect("config serializes"),
    };
    if cfg.downsample > 1 {
        downsample(&ds, cfg.downsample)
    } else {
        Ok(ds)
    }
}

#[derive(Debug, Clone)]
pub struct SplitDatasets {
    pub train: TrajectoryDataset,
    pub valid: TrajectoryDataset,
    pub test: TrajectoryDataset,
}

pub fn generate_splits(cfg: &GenerationConfig) -> Result<SplitDatasets, DatasetError> {
    Ok(SplitDatasets {
        train: generate_trajectories(cfg, Split::Train)?,
        valid: generate_trajectories(cfg, Split::Valid)?,
        test: generate_trajectories(cfg, Split::Test)?,
    })
}
