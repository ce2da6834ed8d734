pub mod bench;
pub mod eval;
pub mod generate;
pub mod gradcheck;
pub mod spectrum;
pub mod train;

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::CliError;
use crate::log;
use crate::manifest::ManifestGuard;

pub(crate) fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingFile(path.to_path_buf()))
    }
}

pub(crate) fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(std::io::BufWriter::new(file))
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

/// Inputs are never overwritten: every output must be a different file.
pub(crate) fn check_outputs(inputs: &[&Path], outputs: &[&Path]) -> Result<(), CliError> {
    for o in outputs {
        if let Some(i) = inputs.iter().find(|i| same_file(i, o)) {
            return Err(CliError::Usage(format!("output {} would overwrite input {}", o.display(), i.display())));
        }
        if let Some(parent) = o.parent().filter(|p| !p.as_os_str().is_empty()) {
            if !parent.is_dir() {
                return Err(CliError::Usage(format!("output directory {} does not exist", parent.display())));
            }
        }
    }
    Ok(())
}

/// What a command declares before it runs.
pub(crate) struct RunSpec<'a> {
    pub command: &'a str,
    pub manifest: PathBuf,
    pub config: Value,
    pub seed: Option<u64>,
    pub inputs: Vec<&'a Path>,
    pub outputs: Vec<&'a Path>,
}

/// Writes the manifest, runs `body`, and finalizes the manifest with the
/// summary `body` returns or the error it fails with.
pub(crate) fn with_manifest(spec: RunSpec<'_>, body: impl FnOnce() -> Result<Value, CliError>) -> Result<(), CliError> {
    check_outputs(&spec.inputs, &spec.outputs)?;
    let mut guard = ManifestGuard::begin(spec.manifest, spec.command, spec.config, spec.seed, &spec.inputs, &spec.outputs)?;
    log::info("start", serde_json::json!({"command": spec.command, "manifest": guard.path()}));
    let outcome = body().map(|summary| guard.set_summary(summary));
    let manifest = guard.finish(&outcome)?;
    if outcome.is_ok() {
        log::info("done", serde_json::json!({"command": spec.command, "wall_seconds": manifest.wall_seconds}));
    }
    outcome
}
