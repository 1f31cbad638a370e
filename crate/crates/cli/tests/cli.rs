use std::path::Path;
use std::process::{Command, Output};

fn helm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helm"))
        .args(args)
        .env_remove("HELM_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = helm(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// (label, magnification) columns of a detections file.
fn detections(path: &Path) -> Vec<(i32, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}

fn flag_rate(path: &Path) -> f64 {
    let d = detections(path);
    d.iter().filter(|(l, _)| *l == -1).count() as f64 / d.len() as f64
}

const SMALL: [&str; 4] = ["--samples", "1400", "--sensors", "40"];

fn small_dataset(dir: &Path, seed: &str) {
    let mut args = vec!["generate", "--seed", seed, "--out", s(dir)];
    args.extend(SMALL);
    ok(&args);
}

#[test]
fn generate_writes_reference_shape_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        ok(&[
            "generate",
            "--n",
            "5",
            "--reading",
            "log",
            "--seed",
            "7",
            "--out",
            s(d),
        ]);
    }
    let text = std::fs::read_to_string(a.join("data.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 200);
    assert_eq!(lines.clone().count(), 14_000);
    assert!(lines.all(|l| l.split(',').count() == 200));
    for f in ["data.csv", "provenance.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap()
        );
    }
    assert!(a.join("run_config_generate.txt").exists());
}

#[test]
fn generate_validates_base_signal_count() {
    let tmp = tempfile::tempdir().unwrap();
    let out = helm(&["generate", "--n", "7", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let mut args = vec!["generate", "--n", "7", "--allow-any-n", "--out", s(tmp.path())];
    args.extend(SMALL);
    ok(&args);
}

#[test]
fn generate_refuses_to_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    small_dataset(tmp.path(), "1");
    let mut args = vec!["generate", "--out", s(tmp.path())];
    args.extend(SMALL);
    assert_eq!(helm(&args).status.code(), Some(2));
    args.push("--force");
    ok(&args);
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("env-out");
    let out = Command::new(env!("CARGO_BIN_EXE_helm"))
        .args(["generate"])
        .args(SMALL)
        .env("HELM_OUTPUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("data.csv").exists());
}

#[test]
fn config_file_values_yield_to_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("gen.txt");
    std::fs::write(
        &cfg,
        "# small run\nsamples = 1400\nsensors = 40\nseed = 3\nn = 10\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    ok(&["generate", "--config", s(&cfg), "--seed", "9", "--out", s(&out)]);
    let echo = std::fs::read_to_string(out.join("run_config_generate.txt")).unwrap();
    assert!(echo.contains("seed = 9\n"));
    assert!(echo.contains("n = 10\n"));
    assert!(echo.contains("samples = 1400\n"));

    // the echo is itself a valid config file
    let again = tmp.path().join("p");
    ok(&[
        "generate",
        "--config",
        s(&out.join("run_config_generate.txt")),
        "--out",
        s(&again),
    ]);
    assert_eq!(
        std::fs::read(out.join("data.csv")).unwrap(),
        std::fs::read(again.join("data.csv")).unwrap()
    );
}

#[test]
fn detect_requires_calibration() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_dataset(d, "2");
    let data = d.join("data.csv");
    ok(&[
        "train",
        "--data",
        s(&data),
        "--rows",
        "0:700",
        "--ensemble",
        "1",
        "--out",
        s(d),
    ]);
    let out = helm(&["detect", "--data", s(&data), "--out", s(d)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("uncalibrated"));
}

#[test]
fn schema_mismatch_names_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_dataset(d, "3");
    let data = d.join("data.csv");
    ok(&[
        "train",
        "--data",
        s(&data),
        "--rows",
        "0:700",
        "--ensemble",
        "1",
        "--out",
        s(d),
    ]);
    let text = std::fs::read_to_string(&data).unwrap();
    let renamed = text.replacen("s1,", "temp,", 1);
    let other = d.join("other.csv");
    std::fs::write(&other, renamed).unwrap();
    let out = helm(&[
        "calibrate",
        "--data",
        s(&other),
        "--rows",
        "700:800",
        "--out",
        s(d),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("s1") && err.contains("temp"), "{err}");
}

#[test]
fn malformed_csv_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n3,x\n").unwrap();
    let out = helm(&["train", "--data", s(&bad), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3, column 2"));
}

#[test]
fn calibration_rows_flag_rate_follows_percentile() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["generate", "--out", s(d)]);
    let data = d.join("data.csv");
    ok(&["train", "--data", s(&data), "--rows", "0:7000", "--out", s(d)]);
    ok(&[
        "calibrate",
        "--data",
        s(&data),
        "--rows",
        "7000:8000",
        "--gamma",
        "1",
        "--out",
        s(d),
    ]);
    ok(&["detect", "--data", s(&data), "--rows", "7000:8000", "--out", s(d)]);
    assert!(flag_rate(&d.join("detections.csv")) <= 1.0 - 99.5 / 100.0 + 0.005);
}

#[test]
fn fault2_mean_magnification_exceeds_one() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["generate", "--seed", "5", "--out", s(d)]);
    let data = d.join("data.csv");
    ok(&["train", "--data", s(&data), "--rows", "0:7000", "--out", s(d)]);
    ok(&[
        "calibrate",
        "--data",
        s(&data),
        "--rows",
        "7000:8000",
        "--out",
        s(d),
    ]);
    ok(&[
        "detect",
        "--data",
        s(&data),
        "--rows",
        "10000:11000",
        "--out",
        s(d),
    ]);
    let det = detections(&d.join("detections.csv"));
    let mean = det.iter().map(|(_, m)| m).sum::<f64>() / det.len() as f64;
    assert!(mean > 1.0, "mean magnification {mean}");
}

#[test]
fn pipeline_reproduces_benchmark_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let bench = tmp.path().join("bench");
    let mut args = vec![
        "benchmark",
        "--reps",
        "1",
        "--seed",
        "4",
        "--models",
        "helm",
        "--gammas",
        "1.5",
        "--ensemble",
        "2",
        "--out",
        s(&bench),
    ];
    args.extend(SMALL);
    ok(&args);
    let seeds = std::fs::read_to_string(bench.join("seeds.csv")).unwrap();
    let seed = seeds
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .to_string();
    let rep: serde_json::Value = serde_json::from_str(
        std::fs::read_to_string(bench.join("reps.jsonl"))
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();

    let d = tmp.path().join("pipe");
    small_dataset(&d, &seed);
    let data = d.join("data.csv");
    ok(&[
        "train",
        "--data",
        s(&data),
        "--rows",
        "0:700",
        "--seed",
        &seed,
        "--ensemble",
        "2",
        "--out",
        s(&d),
    ]);
    ok(&[
        "calibrate",
        "--data",
        s(&data),
        "--rows",
        "700:800",
        "--gamma",
        "1.5",
        "--out",
        s(&d),
    ]);
    let rate = |rows: &str| {
        ok(&["detect", "--data", s(&data), "--rows", rows, "--out", s(&d)]);
        flag_rate(&d.join("detections.csv"))
    };
    assert_eq!(rate("800:900"), rep["fpr"].as_f64().unwrap());
    for f in 0..5 {
        let rows = format!("{}:{}", 900 + 100 * f, 1000 + 100 * f);
        assert_eq!(rate(&rows), rep["tpr"][f].as_f64().unwrap(), "fault {}", f + 1);
    }
}

#[test]
fn benchmark_emits_reports_and_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    let mut args = vec![
        "benchmark",
        "--reps",
        "2",
        "--ensemble",
        "1",
        "--jobs",
        "2",
        "--out",
        s(&out),
    ];
    args.extend(SMALL);
    let stdout = ok(&args);
    assert!(stdout.contains("HELM") && stdout.contains("PCAELM"));
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 3 * 7 * 5);
    assert!(report.lines().skip(1).all(|l| l.split(',').nth(10) == Some("2")));
    let roc = std::fs::read_to_string(out.join("roc.csv")).unwrap();
    assert_eq!(roc.lines().count(), 1 + 3 * 7);
    for f in [
        "timing.csv",
        "report.json",
        "seeds.csv",
        "reps.jsonl",
        "run_config_benchmark.txt",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(helm(&args).status.code(), Some(2));
}
