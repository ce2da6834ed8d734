use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct HostInfo {
    pub hostname: String,
    pub os: &'static str,
    pub arch: &'static str,
    pub cpus: usize,
    pub threads: usize,
}

impl HostInfo {
    pub fn current() -> Self {
        let hostname = std::fs::read_to_string("/etc/hostname")
            .ok()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .or_else(|| std::env::var("HOSTNAME").ok())
            .unwrap_or_else(|| "unknown".into());
        Self {
            hostname,
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bytes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

impl FileRecord {
    fn of(path: &Path, hash: bool) -> Self {
        let (bytes, sha256) = match std::fs::read(path) {
            Ok(data) if hash => (Some(data.len() as u64), Some(hex::encode(Sha256::digest(&data)))),
            _ => (std::fs::metadata(path).ok().map(|m| m.len()), None),
        };
        Self { path: path.to_path_buf(), bytes, sha256 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub category: &'static str,
    pub exit_code: i32,
    pub message: String,
}

/// Provenance of one command run, written when the run starts and
/// rewritten with outputs, checksums and status when it ends.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub status: RunStatus,
    /// The fully resolved configuration the command ran with.
    pub config: Value,
    pub seed: Option<u64>,
    pub code_version: String,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub wall_seconds: Option<f64>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub host: HostInfo,
    /// Command-specific results such as the final loss.
    pub summary: Value,
    pub error: Option<ErrorReport>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write_json_atomic(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, text + "\n").map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// A manifest that has been written in its running state.
pub struct ManifestGuard {
    path: PathBuf,
    manifest: RunManifest,
    outputs: Vec<PathBuf>,
    start: Instant,
}

impl ManifestGuard {
    pub fn begin(
        path: PathBuf,
        command: &str,
        config: Value,
        seed: Option<u64>,
        inputs: &[&Path],
        outputs: &[&Path],
    ) -> Result<Self, CliError> {
        let manifest = RunManifest {
            command: command.into(),
            argv: std::env::args().collect(),
            status: RunStatus::Running,
            config,
            seed,
            code_version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).into(),
            started_at: now(),
            finished_at: None,
            wall_seconds: None,
            inputs: inputs.iter().map(|p| FileRecord::of(p, true)).collect(),
            outputs: outputs.iter().map(|p| FileRecord { path: p.to_path_buf(), bytes: None, sha256: None }).collect(),
            host: HostInfo::current(),
            summary: Value::Null,
            error: None,
        };
        let guard = Self { path, manifest, outputs: outputs.iter().map(|p| p.to_path_buf()).collect(), start: Instant::now() };
        write_json_atomic(&guard.path, &guard.manifest)?;
        Ok(guard)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn set_summary(&mut self, summary: Value) {
        self.manifest.summary = summary;
    }

    /// Rewrites the manifest with the outcome and output checksums.
    pub fn finish(mut self, outcome: &Result<(), CliError>) -> Result<RunManifest, CliError> {
        self.manifest.finished_at = Some(now());
        self.manifest.wall_seconds = Some(self.start.elapsed().as_secs_f64());
        self.manifest.outputs = self.outputs.iter().map(|p| FileRecord::of(p, true)).collect();
        match outcome {
            Ok(()) => self.manifest.status = RunStatus::Succeeded,
            Err(e) => {
                self.manifest.status = RunStatus::Failed;
                self.manifest.error =
                    Some(ErrorReport { category: e.category(), exit_code: e.exit_code(), message: e.to_string() });
            }
        }
        write_json_atomic(&self.path, &self.manifest)?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_is_written_before_and_after() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.bin");
        std::fs::write(&input, b"abc").unwrap();
        let out = dir.path().join("out.bin");
        let mpath = manifest_path(&out);
        assert_eq!(mpath.file_name().unwrap(), "out.bin.manifest.json");

        let g = ManifestGuard::begin(mpath.clone(), "test", serde_json::json!({"k": 1}), Some(4), &[&input], &[&out]).unwrap();
        let running: Value = serde_json::from_str(&std::fs::read_to_string(&mpath).unwrap()).unwrap();
        assert_eq!(running["status"], "running");
        assert_eq!(
            running["inputs"][0]["sha256"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );

        std::fs::write(&out, b"result").unwrap();
        g.finish(&Ok(())).unwrap();
        let done: Value = serde_json::from_str(&std::fs::read_to_string(&mpath).unwrap()).unwrap();
        assert_eq!(done["status"], "succeeded");
        assert_eq!(done["outputs"][0]["bytes"], 6);
        assert_eq!(done["config"]["k"], 1);
        assert_eq!(done["seed"], 4);
        assert!(done["finished_at"].is_string());
    }

    #[test]
    fn failures_are_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let mpath = dir.path().join("run.manifest.json");
        let g = ManifestGuard::begin(mpath.clone(), "test", Value::Null, None, &[], &[]).unwrap();
        g.finish(&Err(CliError::NonFiniteLoss(3))).unwrap();
        let done: Value = serde_json::from_str(&std::fs::read_to_string(&mpath).unwrap()).unwrap();
        assert_eq!(done["status"], "failed");
        assert_eq!(done["error"]["category"], "non_finite_loss");
        assert_eq!(done["error"]["exit_code"], 7);
    }
}
