use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use ffno_core::dataset::{load, Split};
use ffno_core::ffno::FfnoConfig;
use ffno_core::training::{init_checkpoint, train, Checkpoint, StepRecord, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{require_file, with_manifest, RunSpec};
use crate::config::{self, set_opt};
use crate::error::CliError;
use crate::log;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training config with `[model]` and `[train]` tables (TOML, or JSON).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Train-split dataset (.ffnods).
    #[arg(long, value_name = "FILE")]
    pub dataset: PathBuf,
    /// Output checkpoint (.ffnock); the step log goes to <out>.log.jsonl.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Continue a run from this checkpoint with its stored configuration.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["config", "seed", "steps", "batch_size", "warmup_steps", "peak_lr", "noise_std", "weight_decay", "layers", "hidden", "modes", "factorized"])]
    pub resume: Option<PathBuf>,
    /// Seed of initialization, batching and input noise. Required here or in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Total optimizer steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Training pairs per optimizer step.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Steps of linear learning-rate warmup.
    #[arg(long)]
    pub warmup_steps: Option<usize>,
    /// Learning rate after warmup, before cosine decay.
    #[arg(long)]
    pub peak_lr: Option<f64>,
    /// Standard deviation of the Gaussian noise added to normalized inputs.
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Decoupled weight decay factor.
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Operator layers.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Hidden channels.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Fourier modes kept per dimension.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Factorized (true) or joint two-dimensional (false) spectral weights.
    #[arg(long)]
    pub factorized: Option<bool>,
    /// Rewrite the checkpoint every N steps (0: only at the end).
    #[arg(long, default_value_t = 0, value_name = "N")]
    pub save_every: usize,
    /// Emit a progress record on stderr every N steps.
    #[arg(long, default_value_t = 100, value_name = "N")]
    pub log_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub model: FfnoConfig,
    pub train: TrainConfig,
}

/// Desk-scale defaults: 4 layers of 32 channels and 8 modes, 2000 steps.
fn defaults() -> Value {
    let mut v = serde_json::to_value(TrainFile { model: FfnoConfig::new(4, 32, 8), train: TrainConfig::new(2000, 0) })
        .expect("config serializes");
    v["train"].as_object_mut().expect("table").remove("seed");
    v
}

pub fn resolve(args: &TrainArgs) -> Result<TrainFile, CliError> {
    let mut v = defaults();
    if let Some(p) = &args.config {
        config::merge(&mut v, config::read_file(p)?);
    }
    set_opt(&mut v, "train.seed", args.seed);
    set_opt(&mut v, "train.steps", args.steps);
    set_opt(&mut v, "train.batch_size", args.batch_size);
    set_opt(&mut v, "train.warmup_steps", args.warmup_steps);
    set_opt(&mut v, "train.peak_lr", args.peak_lr);
    set_opt(&mut v, "train.noise_std", args.noise_std);
    set_opt(&mut v, "train.weight_decay", args.weight_decay);
    set_opt(&mut v, "model.layers", args.layers);
    set_opt(&mut v, "model.hidden", args.hidden);
    set_opt(&mut v, "model.modes", args.modes);
    set_opt(&mut v, "model.factorized", args.factorized);
    let source = args.config.as_deref().map_or("training config".into(), |p| p.display().to_string());
    let file: TrainFile = config::resolve(v, &source)?;
    file.model.validate()?;
    file.train.validate()?;
    Ok(file)
}

/// `<checkpoint>.log.jsonl`.
pub fn log_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_os_string();
    s.push(".log.jsonl");
    PathBuf::from(s)
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    require_file(&args.dataset)?;
    let (start, resolved) = match &args.resume {
        Some(path) => {
            require_file(path)?;
            let ckpt = Checkpoint::load(path)?;
            let file = TrainFile { model: ckpt.model.config().clone(), train: ckpt.train.clone() };
            (Some(ckpt), file)
        }
        None => (None, resolve(&args)?),
    };
    let log_file = log_path(&args.out);
    let mut inputs: Vec<&Path> = vec![&args.dataset];
    inputs.extend(args.config.as_deref());
    inputs.extend(args.resume.as_deref());
    let spec = RunSpec {
        command: "train",
        manifest: crate::manifest::manifest_path(&args.out),
        config: serde_json::to_value(&resolved).expect("config serializes"),
        seed: Some(resolved.train.seed),
        inputs,
        outputs: vec![&args.out, &log_file],
    };
    with_manifest(spec, || {
        let ds = load(&args.dataset)?;
        if ds.split != Split::Train {
            return Err(CliError::Schema(format!("{} holds the {} split; training needs train", args.dataset.display(), ds.split.name())));
        }
        let mut ckpt = match start {
            Some(c) => c,
            None => init_checkpoint(resolved.model.clone(), resolved.train.clone(), &ds)?,
        };
        let first = ckpt.step;
        log::info(
            "train",
            json!({"parameters": ckpt.model.num_parameters(), "pairs": ds.len() * (ds.frames - 1), "from_step": first, "steps": resolved.train.steps}),
        );
        let file = std::fs::File::create(&log_file).map_err(|e| CliError::io(&log_file, e))?;
        let mut steps_log = BufWriter::new(file);
        let mut last: Option<StepRecord> = None;
        let mut io_err: Option<std::io::Error> = None;
        let total = resolved.train.steps;
        let chunk = if args.save_every == 0 { total } else { args.save_every };
        while ckpt.step < total {
            let until = (ckpt.step + chunk).min(total);
            let result = train(ckpt.clone(), &ds, until, |r| {
                if let Err(e) = writeln!(steps_log, "{}", serde_json::to_string(r).expect("record serializes")) {
                    io_err.get_or_insert(e);
                }
                if args.log_every > 0 && (r.step + 1) % args.log_every == 0 {
                    log::info("step", serde_json::to_value(r).expect("record serializes"));
                } else {
                    log::debug("step", serde_json::to_value(r).expect("record serializes"));
                }
                last = Some(*r);
            });
            ckpt = match result {
                Ok(c) => c,
                Err(e) => {
                    // keep the records up to the failing step
                    let _ = steps_log.flush();
                    return Err(e.into());
                }
            };
            ckpt.save(&args.out)?;
            steps_log.flush().map_err(|e| CliError::io(&log_file, e))?;
        }
        if ckpt.step == first {
            ckpt.save(&args.out)?;
        }
        if let Some(e) = io_err {
            return Err(CliError::io(&log_file, e));
        }
        Ok(json!({
            "steps": ckpt.step,
            "final_loss": last.map(|r| r.loss),
            "parameters": ckpt.model.num_parameters(),
        }))
    })
}
