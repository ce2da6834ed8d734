use std::path::{Path, PathBuf};

use clap::Args;
use ffno_core::dataset::{generate_trajectories, save, GenerationConfig, Preset, Split};
use serde_json::{json, Value};

use super::{with_manifest, RunSpec};
use crate::config::{self, set_opt};
use crate::error::CliError;
use crate::log;

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generation config (TOML, or JSON with a .json extension). A `preset`
    /// key starts from a named dataset family; other keys override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Dataset family to start from: torus_li, torus_kochkov, torus_v, torus_vf.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory; receives train.ffnods, valid.ffnods and test.ffnods.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Seed of all random draws. Required here or in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Square simulation grid size (overrides solver.grid.nx and ny).
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    /// Recorded frames per trajectory.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Simulated time between recorded frames.
    #[arg(long)]
    pub record_dt: Option<f64>,
    /// Simulated time discarded before the first frame.
    #[arg(long)]
    pub burn_in: Option<f64>,
    /// Solver time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Spectral downsampling factor of recorded frames.
    #[arg(long)]
    pub downsample: Option<usize>,
    /// Trajectories in the train split.
    #[arg(long)]
    pub train: Option<usize>,
    /// Trajectories in the valid split.
    #[arg(long)]
    pub valid: Option<usize>,
    /// Trajectories in the test split.
    #[arg(long)]
    pub test: Option<usize>,
}

fn preset_base(name: &str) -> Result<Value, CliError> {
    let preset = Preset::parse(name).ok_or_else(|| CliError::Schema(format!("unknown preset {name:?}")))?;
    let mut v = serde_json::to_value(GenerationConfig::preset(preset, 0)).expect("config serializes");
    // the preset's placeholder seed must not stand in for an explicit one
    v.as_object_mut().expect("table").remove("seed");
    Ok(v)
}

/// The generation config after presets, file and flags are applied.
pub fn resolve(args: &GenerateArgs) -> Result<GenerationConfig, CliError> {
    let mut file = match &args.config {
        Some(p) => config::read_file(p)?,
        None => json!({}),
    };
    let file_preset = file.as_object_mut().and_then(|m| m.remove("preset"));
    let preset = match (&args.preset, file_preset) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(Value::String(p))) => Some(p),
        (None, Some(other)) => return Err(CliError::Schema(format!("key `preset`: expected a string, found {other}"))),
        (None, None) => None,
    };
    let mut v = match preset {
        Some(p) => preset_base(&p)?,
        None => json!({}),
    };
    config::merge(&mut v, file);
    set_opt(&mut v, "seed", args.seed);
    set_opt(&mut v, "solver.grid.nx", args.grid);
    set_opt(&mut v, "solver.grid.ny", args.grid);
    set_opt(&mut v, "frames", args.frames);
    set_opt(&mut v, "record_dt", args.record_dt);
    set_opt(&mut v, "burn_in", args.burn_in);
    set_opt(&mut v, "solver.dt", args.dt);
    set_opt(&mut v, "downsample", args.downsample);
    set_opt(&mut v, "train", args.train);
    set_opt(&mut v, "valid", args.valid);
    set_opt(&mut v, "test", args.test);
    let source = args.config.as_deref().map_or("generation config".into(), |p| p.display().to_string());
    let cfg: GenerationConfig = config::resolve(v, &source)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn split_path(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{}.ffnods", split.name()))
}

pub fn run(args: GenerateArgs) -> Result<(), CliError> {
    let cfg = resolve(&args)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let outputs: Vec<PathBuf> = Split::ALL.iter().map(|&s| split_path(&args.out, s)).collect();
    let inputs: Vec<&Path> = args.config.as_deref().into_iter().collect();
    let spec = RunSpec {
        command: "generate",
        manifest: args.out.join("generate.manifest.json"),
        config: serde_json::to_value(&cfg).expect("config serializes"),
        seed: Some(cfg.seed),
        inputs,
        outputs: outputs.iter().map(PathBuf::as_path).collect(),
    };
    with_manifest(spec, || {
        let mut counts = serde_json::Map::new();
        for (&split, path) in Split::ALL.iter().zip(&outputs) {
            log::info("simulate", json!({"split": split.name(), "trajectories": cfg.count(split)}));
            let ds = generate_trajectories(&cfg, split)?;
            save(&ds, path)?;
            counts.insert(split.name().into(), json!(ds.len()));
        }
        Ok(json!({"trajectories": counts, "frames": cfg.frames}))
    })
}
