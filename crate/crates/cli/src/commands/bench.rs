use std::path::{Path, PathBuf};

use clap::Args;
use ffno_core::dataset::random_initial_field;
use ffno_core::evaluation::{pareto_scan, write_pareto_csv, ScanCase, ScanReference, TimingOptions, DEFAULT_THRESHOLD};
use ffno_core::ffno::FrameContext;
use ffno_core::solver::{Solver, SolverConfig, SolverState};
use ffno_core::spectral::{fft2_forward, fft2_inverse};
use ffno_core::training::Checkpoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create, require_file, with_manifest, RunSpec};
use crate::config::{self, set_opt};
use crate::error::CliError;
use crate::log;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Benchmark config: reference solver, initial condition and cases.
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Output CSV with columns method,grid,dt,runtime_per_sim_second,t95.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Seed of the random initial condition (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Timed repeats per case; the median is reported.
    #[arg(long)]
    pub repeats: Option<usize>,
}

/// The solver at one resolution and step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverCase {
    pub n: usize,
    pub dt: f64,
}

/// A trained operator; `checkpoint` is relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorCase {
    pub name: String,
    pub checkpoint: PathBuf,
    /// Grid the operator runs on (default: the reference grid).
    #[serde(default)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// High-resolution run every case is scored against.
    pub reference: SolverConfig,
    pub seed: u64,
    #[serde(default = "default_peak")]
    pub peak_wavenumber: f64,
    /// Reference simulation time before the scored window starts.
    #[serde(default)]
    pub burn_in: f64,
    pub horizon: f64,
    pub record_dt: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub solver: Vec<SolverCase>,
    #[serde(default)]
    pub operator: Vec<OperatorCase>,
}

fn default_peak() -> f64 {
    4.0
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_repeats() -> usize {
    TimingOptions::default().repeats
}

pub fn resolve(args: &BenchArgs) -> Result<BenchConfig, CliError> {
    let mut v = config::read_file(&args.config)?;
    set_opt(&mut v, "seed", args.seed);
    set_opt(&mut v, "repeats", args.repeats);
    let cfg: BenchConfig = config::resolve(v, &args.config.display().to_string())?;
    cfg.reference.validate()?;
    if cfg.repeats == 0 {
        return Err(CliError::Schema("repeats must be >= 1".into()));
    }
    if !(cfg.threshold > -1.0 && cfg.threshold < 1.0) {
        return Err(CliError::Schema(format!("threshold {} must lie in (-1, 1)", cfg.threshold)));
    }
    if cfg.solver.is_empty() && cfg.operator.is_empty() {
        return Err(CliError::Schema("no [[solver]] or [[operator]] cases".into()));
    }
    Ok(cfg)
}

/// The reference trajectory from the seeded, burned-in initial condition.
pub fn reference(cfg: &BenchConfig) -> Result<ScanReference, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let omega = random_initial_field(&cfg.reference.grid, cfg.peak_wavenumber, &mut rng);
    let solver = Solver::new(cfg.reference.clone())?;
    let start = SolverState::new(fft2_forward(&omega).map_err(|e| CliError::Other(e.to_string()))?, 0.0);
    let state = solver.advance(&start, solver.steps_for(cfg.burn_in)?)?;
    let omega0 = fft2_inverse(&state.omega_hat).map_err(|e| CliError::Other(e.to_string()))?;
    let mut r = ScanReference::simulate(cfg.reference.clone(), &omega0, cfg.horizon, cfg.record_dt)?;
    r.threshold = cfg.threshold;
    Ok(r)
}

fn relative_to(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new("")).join(p)
    }
}

pub fn run(args: BenchArgs) -> Result<(), CliError> {
    let cfg = resolve(&args)?;
    let checkpoints: Vec<PathBuf> = cfg.operator.iter().map(|o| relative_to(&args.config, &o.checkpoint)).collect();
    for p in &checkpoints {
        require_file(p)?;
    }
    let mut inputs: Vec<&Path> = vec![&args.config];
    inputs.extend(checkpoints.iter().map(PathBuf::as_path));
    let spec = RunSpec {
        command: "bench",
        manifest: crate::manifest::manifest_path(&args.out),
        config: serde_json::to_value(&cfg).expect("config serializes"),
        seed: Some(cfg.seed),
        inputs,
        outputs: vec![&args.out],
    };
    with_manifest(spec, || {
        let models = checkpoints.iter().map(|p| Checkpoint::load(p)).collect::<Result<Vec<_>, _>>()?;
        log::info("reference", json!({"grid": cfg.reference.grid.nx(), "dt": cfg.reference.dt, "horizon": cfg.horizon}));
        let reference = reference(&cfg)?;
        let ctx = FrameContext { nu: cfg.reference.nu, forcing: &cfg.reference.forcing, t: cfg.burn_in };
        let mut cases: Vec<ScanCase<'_>> = cfg.solver.iter().map(|c| ScanCase::Solver { n: c.n, dt: c.dt }).collect();
        for (o, ck) in cfg.operator.iter().zip(&models) {
            cases.push(ScanCase::Operator {
                name: o.name.clone(),
                n: o.n.unwrap_or(cfg.reference.grid.nx()),
                model: &ck.model,
                norm: &ck.norm,
                ctx,
            });
        }
        let rows = pareto_scan(&reference, &cases, &TimingOptions { repeats: cfg.repeats })?;
        for r in &rows {
            log::info("case", serde_json::to_value(r).expect("row serializes"));
        }
        write_pareto_csv(create(&args.out)?, &rows)?;
        Ok(json!({"cases": rows.len(), "reference_frames": reference.frames.len()}))
    })
}
