use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use ffno_core::autodiff::gradcheck::{op_checks, GradCheckReport, DEFAULT_STEP, DEFAULT_TOLERANCE};
use ffno_core::ffno::{model_grad_check, FfnoConfig};
use serde::Serialize;
use serde_json::json;

use super::{create, with_manifest, RunSpec};
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Seed of the random test inputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Finite-difference step.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Also write the table as CSV (with a run manifest next to it).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Row<'a> {
    name: &'a str,
    max_rel_error: f64,
    passed: bool,
}

/// Every op check plus a 2-layer model (H = 4, M = 2) on an 8x8 grid.
pub fn reports(seed: u64, step: f64) -> Result<Vec<GradCheckReport>, CliError> {
    let mut out = op_checks(seed, step).map_err(|e| CliError::Other(e.to_string()))?;
    out.push(model_grad_check(FfnoConfig::new(2, 4, 2), 8, 8, seed, step)?);
    Ok(out)
}

fn table(reports: &[GradCheckReport], tolerance: f64) -> String {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(2).max(2);
    let mut s = format!("{:<width$}  {:>13}  status\n", "op", "max_rel_error");
    for r in reports {
        let status = if r.passed(tolerance) { "ok" } else { "FAIL" };
        s += &format!("{:<width$}  {:>13.3e}  {status}\n", r.name, r.max_rel_error);
    }
    s
}

fn check(args: &GradcheckArgs) -> Result<Vec<GradCheckReport>, CliError> {
    if !(args.step > 0.0 && args.tolerance > 0.0) {
        return Err(CliError::Usage("--step and --tolerance must be > 0".into()));
    }
    let reports = reports(args.seed, args.step)?;
    let mut stdout = std::io::stdout().lock();
    write!(stdout, "{}", table(&reports, args.tolerance)).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(reports)
}

fn verdict(reports: &[GradCheckReport], tolerance: f64) -> Result<serde_json::Value, CliError> {
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed(tolerance)).map(|r| r.name.as_str()).collect();
    let worst = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    if failed.is_empty() {
        Ok(json!({"checks": reports.len(), "max_rel_error": worst}))
    } else {
        Err(CliError::GradCheck(failed.join(", ")))
    }
}

pub fn run(args: GradcheckArgs) -> Result<(), CliError> {
    let Some(out) = &args.out else {
        let reports = check(&args)?;
        return verdict(&reports, args.tolerance).map(|_| ());
    };
    let spec = RunSpec {
        command: "gradcheck",
        manifest: crate::manifest::manifest_path(out),
        config: json!({"seed": args.seed, "step": args.step, "tolerance": args.tolerance}),
        seed: Some(args.seed),
        inputs: vec![],
        outputs: vec![out],
    };
    with_manifest(spec, || {
        let reports = check(&args)?;
        let mut w = csv_writer(out)?;
        for r in &reports {
            w.serialize(Row { name: &r.name, max_rel_error: r.max_rel_error, passed: r.passed(args.tolerance) })
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::io(out, e))?;
        verdict(&reports, args.tolerance)
    })
}

fn csv_writer(path: &std::path::Path) -> Result<csv::Writer<std::io::BufWriter<std::fs::File>>, CliError> {
    Ok(csv::Writer::from_writer(create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_marks_failures() {
        let r = |name: &str, e: f64| GradCheckReport { name: name.into(), max_rel_error: e, per_input: vec![e] };
        let t = table(&[r("add", 1e-9), r("matmul", 3e-4)], 1e-4);
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[0].starts_with("op"));
        assert!(lines[1].starts_with("add") && lines[1].ends_with("ok"));
        assert!(lines[2].starts_with("matmul") && lines[2].ends_with("FAIL"));
        assert!(matches!(verdict(&[r("matmul", 3e-4)], 1e-4), Err(CliError::GradCheck(_))));
    }
}
