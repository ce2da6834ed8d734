use std::path::PathBuf;

use clap::Args;
use ffno_core::dataset::load;
use ffno_core::evaluation::{energy_spectrum, write_spectrum_csv};
use ffno_core::spectral::{fft2_forward, velocity_from_vorticity};
use serde_json::json;

use super::{create, require_file, with_manifest, RunSpec};
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Dataset (.ffnods) holding the frames.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Output CSV with columns k,E.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Trajectory index; without it the spectrum is averaged over all trajectories.
    #[arg(long)]
    pub trajectory: Option<usize>,
    /// Frame index (default: the last frame).
    #[arg(long)]
    pub frame: Option<usize>,
}

pub fn run(args: SpectrumArgs) -> Result<(), CliError> {
    require_file(&args.input)?;
    let spec = RunSpec {
        command: "spectrum",
        manifest: crate::manifest::manifest_path(&args.out),
        config: json!({"trajectory": args.trajectory, "frame": args.frame}),
        seed: None,
        inputs: vec![&args.input],
        outputs: vec![&args.out],
    };
    with_manifest(spec, || {
        let ds = load(&args.input)?;
        let frame = args.frame.unwrap_or(ds.frames - 1);
        if frame >= ds.frames {
            return Err(CliError::Usage(format!("--frame {frame} out of range (dataset has {} frames)", ds.frames)));
        }
        let which: Vec<usize> = match args.trajectory {
            Some(k) if k >= ds.len() => {
                return Err(CliError::Usage(format!("--trajectory {k} out of range (dataset has {})", ds.len())))
            }
            Some(k) => vec![k],
            None => (0..ds.len()).collect(),
        };
        if which.is_empty() {
            return Err(CliError::Schema(format!("{} holds no trajectories", args.input.display())));
        }
        let mut total: Vec<f64> = Vec::new();
        for &k in &which {
            let omega_hat = fft2_forward(&ds.frame_field(k, frame)).map_err(|e| CliError::Other(e.to_string()))?;
            let e = energy_spectrum(&velocity_from_vorticity(&omega_hat));
            total.resize(e.len(), 0.0);
            total.iter_mut().zip(&e).for_each(|(t, v)| *t += v);
        }
        total.iter_mut().for_each(|v| *v /= which.len() as f64);
        write_spectrum_csv(create(&args.out)?, &total)?;
        Ok(json!({"bins": total.len(), "trajectories": which.len(), "frame": frame, "energy": total.iter().sum::<f64>()}))
    })
}
