use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{relative_l2, time_to_decorrelation, vorticity_correlation, EvalError};
use crate::dataset::{truncate_field, NormStats, TrajectoryDataset};
use crate::ffno::{FfnoModel, FrameContext};
use crate::solver::{Solver, SolverConfig, SolverState};
use crate::spectral::{fft2_forward_unchecked, fft2_inverse_unchecked, RealField};
use crate::training::predict_next;

/// How rollouts are timed: one untimed warm-up step, then the median of
/// `repeats` timed runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingOptions {
    pub repeats: usize,
}

impl Default for TimingOptions {
    fn default() -> Self {
        Self { repeats: 5 }
    }
}

/// Recorded frames of one rollout (frame 0 is the initial condition) and,
/// after [`RolloutResult::compare`], their agreement with a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    pub frames: Vec<RealField>,
    pub record_dt: f64,
    pub rho: Vec<f64>,
    pub n_mse: Vec<f64>,
    pub runtime_per_sim_second: f64,
}

impl RolloutResult {
    /// Scores every frame against `truth`, spectrally truncated or padded to
    /// the rollout grid when the grids differ. The shorter sequence wins.
    pub fn compare(&mut self, truth: &[RealField]) -> Result<(), EvalError> {
        let n = self.frames.len().min(truth.len());
        let (mut rho, mut err) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for (f, t) in self.frames.iter().zip(truth) {
            let t = if t.grid() == f.grid() { t.clone() } else { truncate_field(t, *f.grid()) };
            rho.push(vorticity_correlation(f, &t)?);
            err.push(relative_l2(f.values(), t.values())?);
        }
        self.rho = rho;
        self.n_mse = err;
        Ok(())
    }

    /// Time until the correlation with the reference drops below `threshold`.
    pub fn decorrelation_time(&self, threshold: f64) -> f64 {
        time_to_decorrelation(&self.rho, self.record_dt, threshold)
    }

    fn new(frames: Vec<RealField>, record_dt: f64, seconds: f64) -> Self {
        let span = frames.len().saturating_sub(1) as f64 * record_dt;
        let runtime_per_sim_second = if span > 0.0 { seconds / span } else { 0.0 };
        Self { frames, record_dt, rho: Vec::new(), n_mse: Vec::new(), runtime_per_sim_second }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs `f` `repeats` times on a single worker thread and returns the first
/// output with the median wall time.
fn timed<T: Send>(timing: &TimingOptions, f: impl Fn() -> Result<T, EvalError> + Sync) -> Result<(T, f64), EvalError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| EvalError::Io(e.to_string()))?;
    pool.install(|| {
        let mut first = None;
        let mut times = Vec::with_capacity(timing.repeats.max(1));
        for _ in 0..timing.repeats.max(1) {
            let start = Instant::now();
            let out = f()?;
            times.push(start.elapsed().as_secs_f64());
            first.get_or_insert(out);
        }
        Ok((first.expect("at least one run"), median(times)))
    })
}

/// Simulates from `omega0` for `horizon` and records a frame every
/// `record_dt`, both integer multiples of the solver step.
pub fn rollout_solver(
    cfg: &SolverConfig,
    omega0: &RealField,
    horizon: f64,
    record_dt: f64,
    timing: &TimingOptions,
) -> Result<RolloutResult, EvalError> {
    let solver = Solver::new(cfg.clone())?;
    let stride = solver.steps_for(record_dt)?;
    let frames = solver.steps_for(horizon)? / stride.max(1);
    if stride == 0 || frames * stride != solver.steps_for(horizon)? {
        return Err(EvalError::Config(format!("horizon {horizon} is not a multiple of record_dt {record_dt}")));
    }
    if omega0.grid() != &cfg.grid {
        return Err(EvalError::Shape("initial field is not on the solver grid".into()));
    }
    let start = SolverState::new(fft2_forward_unchecked(omega0), 0.0);
    solver.step(&start)?;
    let run = || -> Result<Vec<RealField>, EvalError> {
        let mut out = vec![omega0.clone()];
        let mut state = start.clone();
        for _ in 0..frames {
            state = solver.advance(&state, stride)?;
            out.push(fft2_inverse_unchecked(&state.omega_hat));
        }
        Ok(out)
    };
    let (frames, seconds) = timed(timing, run)?;
    Ok(RolloutResult::new(frames, record_dt, seconds))
}

/// Feeds the operator its own predictions for `steps` steps of `record_dt`
/// starting at `ctx.t`.
pub fn rollout_operator(
    model: &FfnoModel,
    norm: &NormStats,
    omega0: &RealField,
    ctx: FrameContext<'_>,
    steps: usize,
    record_dt: f64,
    timing: &TimingOptions,
) -> Result<RolloutResult, EvalError> {
    predict_next(model, norm, omega0, &ctx)?;
    let run = || -> Result<Vec<RealField>, EvalError> {
        let mut out = vec![omega0.clone()];
        for s in 0..steps {
            let c = FrameContext { t: ctx.t + s as f64 * record_dt, ..ctx };
            let next = predict_next(model, norm, &out[s], &c)?;
            out.push(next);
        }
        Ok(out)
    };
    let (frames, seconds) = timed(timing, run)?;
    Ok(RolloutResult::new(frames, record_dt, seconds))
}

/// The trivial predictor that repeats `omega0`.
pub fn persistence_rollout(omega0: &RealField, steps: usize, record_dt: f64) -> RolloutResult {
    RolloutResult::new(vec![omega0.clone(); steps + 1], record_dt, 0.0)
}

/// One row of the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub method: String,
    /// `one_step` (ground-truth input every step) or `rollout`.
    pub mode: String,
    pub trajectory: usize,
    /// Simulated time of the predicted frame.
    pub t: f64,
    pub rho: f64,
    pub n_mse: f64,
}

pub const OPERATOR: &str = "ffno";
pub const PERSISTENCE: &str = "persistence";

fn ctx_of<'a>(ds: &'a TrajectoryDataset, trajectory: usize, t: usize) -> FrameContext<'a> {
    let meta = &ds.trajectories[trajectory];
    FrameContext { nu: meta.viscosity, forcing: &meta.forcing, t: ds.frame_time(t) }
}

fn row(method: &str, mode: &str, trajectory: usize, t: f64, pred: &RealField, truth: &RealField) -> Result<MetricRow, EvalError> {
    Ok(MetricRow {
        method: method.into(),
        mode: mode.into(),
        trajectory,
        t,
        rho: vorticity_correlation(pred, truth)?,
        n_mse: relative_l2(pred.values(), truth.values())?,
    })
}

/// One-step predictions from every ground-truth frame, for the operator
/// and the persistence baseline. Trajectories are evaluated in parallel.
pub fn one_step_metrics(model: &FfnoModel, norm: &NormStats, ds: &TrajectoryDataset) -> Result<Vec<MetricRow>, EvalError> {
    let per: Vec<Vec<MetricRow>> = (0..ds.len())
        .into_par_iter()
        .map(|k| {
            let mut rows = Vec::new();
            for t in 0..ds.frames - 1 {
                let (input, truth) = (ds.frame_field(k, t), ds.frame_field(k, t + 1));
                let pred = predict_next(model, norm, &input, &ctx_of(ds, k, t))?;
                let time = ds.frame_time(t + 1);
                rows.push(row(OPERATOR, "one_step", k, time, &pred, &truth)?);
                rows.push(row(PERSISTENCE, "one_step", k, time, &input, &truth)?);
            }
            Ok(rows)
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Autoregressive rollouts from the first frame of every trajectory over
/// the recorded horizon, next to the persistence baseline.
pub fn rollout_metrics(model: &FfnoModel, norm: &NormStats, ds: &TrajectoryDataset) -> Result<Vec<MetricRow>, EvalError> {
    let per: Vec<Vec<MetricRow>> = (0..ds.len())
        .into_par_iter()
        .map(|k| {
            let truth: Vec<RealField> = (0..ds.frames).map(|t| ds.frame_field(k, t)).collect();
            let mut frames = vec![truth[0].clone()];
            for t in 0..ds.frames - 1 {
                let next = predict_next(model, norm, &frames[t], &ctx_of(ds, k, t))?;
                frames.push(next);
            }
            let mut rows = Vec::new();
            for t in 1..ds.frames {
                let time = ds.frame_time(t);
                rows.push(row(OPERATOR, "rollout", k, time, &frames[t], &truth[t])?);
                rows.push(row(PERSISTENCE, "rollout", k, time, &truth[0], &truth[t])?);
            }
            Ok(rows)
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Mean N-MSE of the rows with the given method and mode.
pub fn mean_n_mse(rows: &[MetricRow], method: &str, mode: &str) -> Option<f64> {
    let sel: Vec<f64> = rows.iter().filter(|r| r.method == method && r.mode == mode).map(|r| r.n_mse).collect();
    (!sel.is_empty()).then(|| sel.iter().sum::<f64>() / sel.len() as f64)
}
