use serde::Serialize;

use super::{rollout_operator, rollout_solver, EvalError, RolloutResult, TimingOptions};
use crate::dataset::{truncate_field, NormStats};
use crate::ffno::{FfnoModel, FrameContext};
use crate::solver::SolverConfig;
use crate::spectral::RealField;

pub const DEFAULT_THRESHOLD: f64 = 0.95;

/// A high-accuracy trajectory that every scanned method is scored against.
#[derive(Debug, Clone)]
pub struct ScanReference {
    /// Solver settings of the reference run; solver cases reuse them with
    /// their own grid and step.
    pub solver: SolverConfig,
    pub frames: Vec<RealField>,
    pub record_dt: f64,
    pub threshold: f64,
}

impl ScanReference {
    pub fn simulate(solver: SolverConfig, omega0: &RealField, horizon: f64, record_dt: f64) -> Result<Self, EvalError> {
        let run = rollout_solver(&solver, omega0, horizon, record_dt, &TimingOptions { repeats: 1 })?;
        Ok(Self { solver, frames: run.frames, record_dt, threshold: DEFAULT_THRESHOLD })
    }

    pub fn horizon(&self) -> f64 {
        self.frames.len().saturating_sub(1) as f64 * self.record_dt
    }
}

pub enum ScanCase<'a> {
    /// The reference solver on an `n x n` grid with step `dt`.
    Solver { n: usize, dt: f64 },
    /// A trained operator on an `n x n` grid, stepping by the reference `record_dt`.
    Operator { name: String, n: usize, model: &'a FfnoModel, norm: &'a NormStats, ctx: FrameContext<'a> },
}

/// One point of the speed/accuracy trade-off.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoRow {
    pub method: String,
    pub grid: usize,
    pub dt: f64,
    pub runtime_per_sim_second: f64,
    pub t95: f64,
}

fn scored(mut run: RolloutResult, reference: &ScanReference) -> Result<RolloutResult, EvalError> {
    run.compare(&reference.frames)?;
    Ok(run)
}

pub fn run_case(reference: &ScanReference, case: &ScanCase<'_>, timing: &TimingOptions) -> Result<ParetoRow, EvalError> {
    let omega0 = &reference.frames[0];
    match case {
        ScanCase::Solver { n, dt } => {
            let grid = reference.solver.grid.resized(*n, *n)?;
            let mut cfg = reference.solver.with_grid(grid);
            cfg.dt = *dt;
            let start = truncate_field(omega0, grid);
            let run = rollout_solver(&cfg, &start, reference.horizon(), reference.record_dt, timing)?;
            let run = scored(run, reference)?;
            Ok(ParetoRow {
                method: "solver".into(),
                grid: *n,
                dt: *dt,
                runtime_per_sim_second: run.runtime_per_sim_second,
                t95: run.decorrelation_time(reference.threshold),
            })
        }
        ScanCase::Operator { name, n, model, norm, ctx } => {
            let grid = reference.solver.grid.resized(*n, *n)?;
            let start = truncate_field(omega0, grid);
            let steps = reference.frames.len() - 1;
            let run = rollout_operator(model, norm, &start, *ctx, steps, reference.record_dt, timing)?;
            let run = scored(run, reference)?;
            Ok(ParetoRow {
                method: name.clone(),
                grid: grid.nx(),
                dt: reference.record_dt,
                runtime_per_sim_second: run.runtime_per_sim_second,
                t95: run.decorrelation_time(reference.threshold),
            })
        }
    }
}

/// Runtime per simulated second and time to decorrelation of every case.
pub fn pareto_scan(reference: &ScanReference, cases: &[ScanCase<'_>], timing: &TimingOptions) -> Result<Vec<ParetoRow>, EvalError> {
    cases.iter().map(|c| run_case(reference, c, timing)).collect()
}

/// The solver on one grid at several step sizes.
pub fn step_size_study(reference: &ScanReference, n: usize, dts: &[f64], timing: &TimingOptions) -> Result<Vec<ParetoRow>, EvalError> {
    let cases: Vec<ScanCase<'_>> = dts.iter().map(|&dt| ScanCase::Solver { n, dt }).collect();
    pareto_scan(reference, &cases, timing)
}
