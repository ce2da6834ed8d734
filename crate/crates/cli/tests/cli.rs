use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ffno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffno")).args(args).env("FFNO_LOG", "error").output().expect("ffno runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn code(args: &[&str]) -> Option<i32> {
    ffno(args).status.code()
}

fn manifest(path: &Path) -> Value {
    let m = ffno_cli::manifest::manifest_path(path);
    serde_json::from_str(&std::fs::read_to_string(m).unwrap()).unwrap()
}

fn tiny_data(dir: &Path, name: &str, seed: &str) -> PathBuf {
    let out = dir.join(name);
    let args = [
        "generate", "--preset", "torus_kochkov", "--seed", seed, "--grid", "16", "--dt", "0.01", "--frames", "4",
        "--record-dt", "0.1", "--burn-in", "0.2", "--train", "2", "--valid", "0", "--test", "1", "--out", p(&out),
    ];
    let o = ffno(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

const TINY_MODEL: [&str; 12] =
    ["--layers", "1", "--hidden", "4", "--modes", "2", "--steps", "4", "--warmup-steps", "1", "--batch-size", "2"];

fn tiny_train(data: &Path, out: &Path) -> Output {
    let train = data.join("train.ffnods");
    let mut args = vec!["train", "--dataset", p(&train), "--out", p(out), "--seed", "3"];
    args.extend(TINY_MODEL);
    ffno(&args)
}

#[test]
fn help_lists_commands_and_flags() {
    let o = ffno(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in ["generate", "train", "eval", "bench", "spectrum", "gradcheck", "FFNO_LOG"] {
        assert!(text.contains(cmd), "missing {cmd}");
    }
    let text = String::from_utf8_lossy(&ffno(&["train", "--help"]).stdout).to_string();
    for flag in ["--dataset", "--resume", "--peak-lr", "--save-every"] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&["generate", "--bogus"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["--threads", "0", "gradcheck"]), Some(2));
}

#[test]
fn config_syntax_error_exits_3_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[model]\nlayers = 2\nhidden = = 3\n").unwrap();
    let data = dir.path().join("d.ffnods");
    std::fs::write(&data, b"").unwrap();
    let o = ffno(&["train", "--config", p(&cfg), "--dataset", p(&data), "--out", p(&dir.path().join("m.ffnock"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn missing_input_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.ffnock");
    assert_eq!(code(&["train", "--dataset", "/nonexistent/train.ffnods", "--out", p(&out), "--seed", "1"]), Some(4));
    assert_eq!(code(&["spectrum", "--input", "/nonexistent/x.ffnods", "--out", p(&dir.path().join("s.csv"))]), Some(4));
}

#[test]
fn schema_errors_exit_5_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.toml");
    std::fs::write(&cfg, "preset = \"torus_kochkov\"\nseed = 1\nfrmes = 3\n").unwrap();
    let o = ffno(&["generate", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("frmes"));

    // the seed has no default
    assert_eq!(code(&["generate", "--preset", "torus_kochkov", "--out", p(dir.path())]), Some(5));
    let cfg = dir.path().join("gen.json");
    std::fs::write(&cfg, r#"{"preset": "torus_kochkov", "seed": 1, "train": -2}"#).unwrap();
    assert_eq!(code(&["generate", "--config", p(&cfg), "--out", p(dir.path())]), Some(5));
}

#[test]
fn generate_is_deterministic_and_records_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let a = tiny_data(dir.path(), "a", "5");
    let b = tiny_data(dir.path(), "b", "5");
    let c = tiny_data(dir.path(), "c", "6");
    let hashes = |d: &Path| -> Vec<String> {
        let m: Value = serde_json::from_str(&std::fs::read_to_string(d.join("generate.manifest.json")).unwrap()).unwrap();
        assert_eq!(m["status"], "succeeded");
        assert_eq!(m["seed"], m["config"]["seed"]);
        m["outputs"].as_array().unwrap().iter().map(|o| o["sha256"].as_str().unwrap().to_string()).collect()
    };
    assert_eq!(hashes(&a).len(), 3);
    assert_eq!(hashes(&a), hashes(&b));
    assert_ne!(hashes(&a)[0], hashes(&c)[0]);
}

#[test]
fn generate_train_eval_flow() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny_data(dir.path(), "data", "1");
    let ck = dir.path().join("m.ffnock");
    let o = tiny_train(&data, &ck);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&ck);
    assert_eq!(m["status"], "succeeded");
    assert_eq!(m["summary"]["steps"], 4);
    let log = std::fs::read_to_string(ffno_cli::commands::train::log_path(&ck)).unwrap();
    let steps: Vec<Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(steps.len(), 4);
    assert!(steps.iter().enumerate().all(|(i, s)| s["step"] == i && s["loss"].as_f64().unwrap().is_finite()));

    let csv = dir.path().join("metrics.csv");
    let test = data.join("test.ffnods");
    let o = ffno(&["eval", "--checkpoint", p(&ck), "--dataset", p(&test), "--out", p(&csv)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,mode,trajectory,t,rho,n_mse"));
    let rows: Vec<&str> = lines.collect();
    for prefix in ["ffno,one_step,", "ffno,rollout,", "persistence,one_step,", "persistence,rollout,"] {
        assert!(rows.iter().any(|r| r.starts_with(prefix)), "no {prefix} rows");
    }
    let summary = &manifest(&csv)["summary"];
    assert!(summary["persistence.one_step.mean_n_mse"].as_f64().unwrap() > 0.0);

    // training twice with one seed gives the same bytes
    let again = dir.path().join("again.ffnock");
    assert!(tiny_train(&data, &again).status.success());
    assert_eq!(std::fs::read(&ck).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn train_rejects_other_splits_and_records_the_failure() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny_data(dir.path(), "data", "2");
    let ck = dir.path().join("m.ffnock");
    let test = data.join("test.ffnods");
    let mut args = vec!["train", "--dataset", p(&test), "--out", p(&ck), "--seed", "3"];
    args.extend(TINY_MODEL);
    assert_eq!(code(&args), Some(5));
    let m = manifest(&ck);
    assert_eq!(m["status"], "failed");
    assert_eq!(m["error"]["category"], "schema");
    assert_eq!(m["error"]["exit_code"], 5);
}

#[test]
fn spectrum_writes_k_e_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny_data(dir.path(), "data", "4");
    let out = dir.path().join("spec.csv");
    let o = ffno(&["spectrum", "--input", p(&data.join("train.ffnods")), "--out", p(&out), "--trajectory", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,E"));
    let energy: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(energy.len() > 4 && energy.iter().all(|e| *e >= 0.0));
    // f32 frames leave only a rounding-level mean
    assert!(energy[0] < 1e-12 * energy.iter().sum::<f64>());

    assert_eq!(code(&["spectrum", "--input", p(&data.join("train.ffnods")), "--out", p(&out), "--trajectory", "9"]), Some(2));
}

#[test]
fn corrupt_files_exit_9_and_inputs_are_never_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny_data(dir.path(), "data", "7");
    let train = data.join("train.ffnods");
    let mut bytes = std::fs::read(&train).unwrap();
    let n = bytes.len();
    bytes[n - 9] ^= 1;
    let bad = dir.path().join("bad.ffnods");
    std::fs::write(&bad, &bytes).unwrap();
    let out = dir.path().join("m.ffnock");
    let o = ffno(&["train", "--dataset", p(&bad), "--out", p(&out), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(9));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checksum"));

    let before = std::fs::read(&train).unwrap();
    assert_eq!(code(&["spectrum", "--input", p(&train), "--out", p(&train)]), Some(2));
    assert_eq!(std::fs::read(&train).unwrap(), before);
}

#[test]
fn gradcheck_writes_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grad.csv");
    let o = ffno(&["gradcheck", "--out", p(&out)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("op"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("name,max_rel_error,passed"));
    assert_eq!(manifest(&out)["status"], "succeeded");
    // an impossible tolerance fails with the gradient-check exit code
    assert_eq!(code(&["gradcheck", "--tolerance", "1e-300"]), Some(8));
}

#[test]
fn example_configs_resolve() {
    use clap::Parser;
    use ffno_cli::{commands, Cli, Command};
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let path = p(&path);
        let argv: Vec<&str> = if name.starts_with("generate") {
            vec!["ffno", "generate", "--config", path, "--out", "x"]
        } else if name.starts_with("train") {
            vec!["ffno", "train", "--config", path, "--dataset", "d", "--out", "x"]
        } else {
            vec!["ffno", "bench", "--config", path, "--out", "x"]
        };
        let ok = match Cli::try_parse_from(argv).unwrap().command {
            Command::Generate(a) => commands::generate::resolve(&a).map(|_| ()),
            Command::Train(a) => commands::train::resolve(&a).map(|_| ()),
            Command::Bench(a) => commands::bench::resolve(&a).map(|_| ()),
            _ => unreachable!(),
        };
        assert!(ok.is_ok(), "{name}: {:?}", ok.err());
        seen += 1;
    }
    assert!(seen >= 4);
}
