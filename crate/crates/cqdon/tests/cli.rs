use std::path::Path;
use std::process::{Command, Output};

use cqdon::io::{self, Checkpoint};

const TINY: &str = r#"
name = "tiny"
seed = 5

[task]
task = "antiderivative"
sensors = 4
resolution = 16
kernel = { kind = "squared_exponential", length_scale = 0.3 }
splits = { kind = "counts", train = 12, cal = 9, test = 6 }

[model]
layers = 2
width = 4

[ensemble]
members = 3

[training]
iterations = 60
lr = 1e-2
loss = "mse"
log_every = 20

[noise]
lambdas = [0.0, 5e-4]
shots = [200, 0]
max_scenarios = 3

[conformal]
alpha = 0.2
"#;

fn cqdon(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqdon")).args(args).env("CQDON_OUTPUT_DIR", dir).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cqdon(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    std::fs::write(&path, TINY).unwrap();
    path.to_string_lossy().into_owned()
}

fn full_run(dir: &Path, threads: &str) {
    let cfg = write_config(dir);
    for cmd in ["gen-data", "train", "calibrate"] {
        ok(dir, &[cmd, "--config", &cfg, "--threads", threads]);
    }
    ok(dir, &["evaluate", "--config", &cfg, "--threads", threads]);
    ok(dir, &["noise-sweep", "--config", &cfg, "--threads", threads]);
}

#[test]
fn pipeline_runs_end_to_end_and_repeats_byte_for_byte() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    full_run(a.path(), "1");
    full_run(b.path(), "3");
    for f in ["dataset.inputs.csv", "dataset.targets.csv", "checkpoint.json", "trace_0.csv", "trace_2.csv", "calibration.json", "metrics.csv"] {
        let fa = std::fs::read(a.path().join(f)).unwrap();
        let fb = std::fs::read(b.path().join(f)).unwrap();
        assert!(fa == fb, "{f} differs between runs");
    }
    let rows = io::read_metrics(&a.path().join(io::METRICS_FILE)).unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0].mode, "exact");
    assert_eq!(rows.iter().filter(|r| r.mode == "fully_quantum").count(), 4);
    for r in &rows {
        assert!((0.0..=100.0).contains(&r.coverage_percent) && r.avg_width >= 0.0 && r.peak_uncertainty >= 0.0);
    }
    let trace = io::read_trace(&a.path().join("trace_1.csv")).unwrap();
    assert_eq!(trace.iter().map(|t| t.iter).collect::<Vec<_>>(), vec![0, 20, 40, 59]);
}

#[test]
fn noiseless_infinite_shot_row_matches_exact_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    for cmd in ["gen-data", "train", "calibrate"] {
        ok(dir.path(), &[cmd, "--config", &cfg]);
    }
    ok(dir.path(), &["evaluate", "--config", &cfg, "--lambda", "0", "--shots", "inf"]);
    ok(dir.path(), &["evaluate", "--config", &cfg, "--oracle"]);
    let rows = io::read_metrics(&dir.path().join(io::METRICS_FILE)).unwrap();
    let (exact, noisy, oracle) = (&rows[0], &rows[1], &rows[2]);
    assert_eq!((exact.mode.as_str(), noisy.mode.as_str(), oracle.mode.as_str()), ("exact", "fully_quantum", "oracle"));
    assert_eq!(noisy.shots, None);
    for r in [noisy, oracle] {
        assert!((r.rel_l2_percent - exact.rel_l2_percent).abs() < 1e-9);
        assert!((r.avg_width - exact.avg_width).abs() < 1e-9);
        assert!((r.peak_uncertainty - exact.peak_uncertainty).abs() < 1e-9);
        assert_eq!(r.coverage_percent, exact.coverage_percent);
        assert!((r.retained_fraction - 1.0).abs() < 1e-12);
    }
}

#[test]
fn compare_writes_resources_and_all_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    for cmd in ["gen-data", "train", "compare"] {
        ok(dir.path(), &[cmd, "--config", &cfg]);
    }
    let rows = io::read_metrics(&dir.path().join(io::METRICS_FILE)).unwrap();
    for mode in ["fully_quantum", "classical_branch", "classical_trunk", "spqc"] {
        assert_eq!(rows.iter().filter(|r| r.mode == mode).count(), 4, "{mode}");
    }
    let res: serde_json::Value = io::load_json(&dir.path().join(io::RESOURCES_FILE)).unwrap();
    let layers = res.as_array().unwrap();
    assert_eq!(layers.len(), 4);
    // 3 members need 2 address qubits on top of the 6-qubit layer register
    assert_eq!(layers[0]["standard"]["qubits"], 6);
    assert_eq!(layers[0]["spqc"]["qubits"], 8);
    let ckpt = Checkpoint::load(&dir.path().join(io::CHECKPOINT_FILE)).unwrap();
    assert_eq!(ckpt.ensemble.len(), 3);
}

#[test]
fn exit_codes_follow_error_categories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    // nothing generated yet
    let out = cqdon(dir.path(), &["train", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gen-data"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, TINY.replace("alpha = 0.2", "alpha = 2.0")).unwrap();
    assert_eq!(cqdon(dir.path(), &["gen-data", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&bad, TINY.replace("[model]", "[model]\nbogus = true")).unwrap();
    let out = cqdon(dir.path(), &["gen-data", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    assert_eq!(cqdon(dir.path(), &["gen-data", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(cqdon(dir.path(), &["gen-data"]).status.code(), Some(2));
    assert_eq!(cqdon(dir.path(), &["evaluate", "--config", &cfg, "--lambda", "1e-3"]).status.code(), Some(2));

    // a window longer than the signal is a configuration error
    let online = ok(dir.path(), &["presets", "online"]);
    std::fs::write(&bad, online.replace("tau = 10", "tau = 500")).unwrap();
    assert_eq!(cqdon(dir.path(), &["gen-data", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    ok(dir.path(), &["gen-data", "--config", &cfg]);
    ok(dir.path(), &["train", "--config", &cfg]);
    let out = cqdon(dir.path(), &["evaluate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("calibrate"));
}

#[test]
fn presets_are_listed_and_printable() {
    let dir = tempfile::tempdir().unwrap();
    let list = ok(dir.path(), &["presets"]);
    for name in ["antiderivative", "antiderivative-w5", "advection", "forecasting", "online"] {
        assert!(list.lines().any(|l| l == name), "{name}");
        let text = ok(dir.path(), &["presets", name]);
        cqdon::ExperimentConfig::from_toml(&text).unwrap();
    }
}
