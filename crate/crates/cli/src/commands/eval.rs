use std::path::PathBuf;

use clap::{Args, ValueEnum};
use ffno_core::dataset::load;
use ffno_core::evaluation::{mean_n_mse, one_step_metrics, rollout_metrics, write_metrics_csv, OPERATOR, PERSISTENCE};
use ffno_core::training::Checkpoint;
use serde_json::json;

use super::{create, require_file, with_manifest, RunSpec};
use crate::error::CliError;
use crate::log;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    /// Ground-truth input at every step.
    OneStep,
    /// The operator consumes its own predictions.
    Rollout,
    /// One-step and rollout.
    Both,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Trained checkpoint (.ffnock).
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// Dataset to score against (.ffnods, any split).
    #[arg(long, value_name = "FILE")]
    pub dataset: PathBuf,
    /// Metrics CSV; persistence-baseline rows are always included.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalMode::Both)]
    pub mode: EvalMode,
}

fn mode_name(m: EvalMode) -> &'static [&'static str] {
    match m {
        EvalMode::OneStep => &["one_step"],
        EvalMode::Rollout => &["rollout"],
        EvalMode::Both => &["one_step", "rollout"],
    }
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    require_file(&args.checkpoint)?;
    require_file(&args.dataset)?;
    let spec = RunSpec {
        command: "eval",
        manifest: crate::manifest::manifest_path(&args.out),
        config: json!({"mode": mode_name(args.mode)}),
        seed: None,
        inputs: vec![&args.checkpoint, &args.dataset],
        outputs: vec![&args.out],
    };
    with_manifest(spec, || {
        let ckpt = Checkpoint::load(&args.checkpoint)?;
        let ds = load(&args.dataset)?;
        ckpt.model.check_grid(ds.grid.ny(), ds.grid.nx())?;
        let mut rows = Vec::new();
        if matches!(args.mode, EvalMode::OneStep | EvalMode::Both) {
            rows.extend(one_step_metrics(&ckpt.model, &ckpt.norm, &ds)?);
        }
        if matches!(args.mode, EvalMode::Rollout | EvalMode::Both) {
            rows.extend(rollout_metrics(&ckpt.model, &ckpt.norm, &ds)?);
        }
        write_metrics_csv(create(&args.out)?, &rows)?;
        let mut summary = serde_json::Map::new();
        for mode in mode_name(args.mode) {
            for method in [OPERATOR, PERSISTENCE] {
                summary.insert(format!("{method}.{mode}.mean_n_mse"), json!(mean_n_mse(&rows, method, mode)));
            }
        }
        log::info("metrics", serde_json::Value::Object(summary.clone()));
        Ok(serde_json::Value::Object(summary))
    })
}
