use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 5
[simulator]
n_days = 10
[schedule]
inner_iterations = 10
global_passes = 2
[evaluation]
reps = 1
[evaluation.inference]
inner_iterations = 6
global_passes = 1
[tuning]
n_candidates = 3
"#;

fn mmlda(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmlda"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = mmlda(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, SMALL).unwrap();
    (dir, config)
}

#[test]
fn generate_is_deterministic_and_sized() {
    let (dir, _) = setup();
    let d = dir.path();
    let stdout = ok(
        d,
        &[
            "generate", "--days", "10", "--seed", "3", "--out", "a.jsonl",
        ],
    );
    assert!(stdout.contains("10 days, 60 blocks"), "{stdout}");
    ok(
        d,
        &[
            "generate", "--days", "10", "--seed", "3", "--out", "b.jsonl",
        ],
    );
    ok(
        d,
        &[
            "generate", "--days", "10", "--seed", "4", "--out", "c.jsonl",
        ],
    );
    let a = std::fs::read(d.join("a.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.jsonl")).unwrap());
    assert_ne!(a, std::fs::read(d.join("c.jsonl")).unwrap());
    let header = String::from_utf8(a)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(header.contains("\"schema_version\":1"), "{header}");
}

#[test]
fn full_pipeline() {
    let (dir, config) = setup();
    let d = dir.path();
    let c = config.to_str().unwrap();
    ok(d, &["--config", c, "generate", "--out", "data.jsonl"]);
    ok(
        d,
        &[
            "--config",
            c,
            "train",
            "--dataset",
            "data.jsonl",
            "--arch",
            "ECM",
            "--out",
            "ecm.json",
        ],
    );
    ok(
        d,
        &[
            "--config",
            c,
            "--threads",
            "1",
            "train",
            "--dataset",
            "data.jsonl",
            "--arch",
            "IPM",
            "--out",
            "ipm.json",
        ],
    );
    assert!(d.join("ecm.log.json").exists());

    let stdout = ok(
        d,
        &[
            "--config",
            c,
            "evaluate",
            "--model",
            "ecm.json",
            "--dataset",
            "data.jsonl",
            "--compare",
            "ipm.json",
            "--out",
            "rep",
        ],
    );
    assert!(stdout.contains("chance 0.7222"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("rep/report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert!((report["chance_level"].as_f64().unwrap() - 26.0 / 36.0).abs() < 1e-12);
    assert!(report["nmi_comparison"].is_array());
    let extrap = std::fs::read_to_string(d.join("rep/extrapolation.csv")).unwrap();
    assert_eq!(extrap.lines().count(), 43);
    for name in [
        "interpolation.csv",
        "topic_vectors.csv",
        "nmi.csv",
        "nmi_comparison.csv",
    ] {
        assert!(d.join("rep").join(name).exists(), "{name}");
    }

    ok(
        d,
        &[
            "--config",
            c,
            "predict",
            "--model",
            "ecm.json",
            "--dataset",
            "data.jsonl",
            "--from",
            "S",
            "--out",
            "p.csv",
        ],
    );
    let preds = std::fs::read_to_string(d.join("p.csv")).unwrap();
    assert_eq!(preds.lines().next().unwrap(), "day,block,condition,p_0,p_1");
    assert_eq!(preds.lines().count(), 1 + 12);

    ok(
        d,
        &[
            "--config",
            c,
            "export",
            "--model",
            "ecm.json",
            "--dataset",
            "data.jsonl",
            "--node",
            "z_S",
            "--split",
            "all",
            "--out",
            "t.csv",
        ],
    );
    assert_eq!(
        std::fs::read_to_string(d.join("t.csv"))
            .unwrap()
            .lines()
            .count(),
        61
    );
}

#[test]
fn training_is_byte_identical_across_runs_and_thread_counts() {
    let (dir, config) = setup();
    let d = dir.path();
    let c = config.to_str().unwrap();
    ok(d, &["--config", c, "generate", "--out", "data.jsonl"]);
    ok(
        d,
        &[
            "--config",
            c,
            "train",
            "--dataset",
            "data.jsonl",
            "--out",
            "a.json",
        ],
    );
    ok(
        d,
        &[
            "--config",
            c,
            "--threads",
            "2",
            "train",
            "--dataset",
            "data.jsonl",
            "--out",
            "b.json",
        ],
    );
    assert_eq!(
        std::fs::read(d.join("a.json")).unwrap(),
        std::fs::read(d.join("b.json")).unwrap()
    );
}

#[test]
fn ncm_evaluation_skips_nmi_and_snapshot_has_no_partner_nodes() {
    let (dir, config) = setup();
    let d = dir.path();
    let c = config.to_str().unwrap();
    ok(d, &["--config", c, "generate", "--out", "data.jsonl"]);
    ok(
        d,
        &[
            "--config",
            c,
            "train",
            "--dataset",
            "data.jsonl",
            "--arch",
            "ncm",
            "--out",
            "ncm.json",
        ],
    );
    let snapshot = std::fs::read_to_string(d.join("ncm.json")).unwrap();
    assert!(!snapshot.contains("z_Rp") && !snapshot.contains("z_Ap"));
    let stdout = ok(
        d,
        &[
            "--config",
            c,
            "evaluate",
            "--model",
            "ncm.json",
            "--dataset",
            "data.jsonl",
            "--out",
            "rep",
        ],
    );
    assert!(stdout.contains("notice: NMI skipped"), "{stdout}");
    assert!(!d.join("rep/nmi.csv").exists());
}

#[test]
fn tune_writes_trace_and_reusable_fragment() {
    let (dir, config) = setup();
    let d = dir.path();
    let c = config.to_str().unwrap();
    ok(d, &["--config", c, "generate", "--out", "data.jsonl"]);
    ok(
        d,
        &[
            "--config",
            c,
            "tune",
            "--dataset",
            "data.jsonl",
            "--arch",
            "NCM",
            "--out",
            "t1",
        ],
    );
    ok(
        d,
        &[
            "--config",
            c,
            "tune",
            "--dataset",
            "data.jsonl",
            "--arch",
            "NCM",
            "--out",
            "t2",
        ],
    );
    let trace = std::fs::read_to_string(d.join("t1/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 4);
    assert_eq!(
        trace,
        std::fs::read_to_string(d.join("t2/trace.csv")).unwrap()
    );
    let scores: Vec<f64> = trace
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let best = scores.iter().cloned().fold(f64::INFINITY, f64::min);

    // The fragment must load as a config on its own.
    let fragment = d.join("t1/best.toml");
    ok(
        d,
        &[
            "--config",
            fragment.to_str().unwrap(),
            "generate",
            "--days",
            "5",
            "--out",
            "x.jsonl",
        ],
    );
    let text = std::fs::read_to_string(&fragment).unwrap();
    assert!(text.contains("[model.weights]"), "{text}");
    assert!(best.is_finite());
}

#[test]
fn errors_are_machine_readable() {
    let (dir, config) = setup();
    let d = dir.path();
    let out = mmlda(d, &["train", "--dataset", "missing.jsonl"]);
    assert!(!out.status.success());
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(record["error"].as_str().unwrap().contains("missing.jsonl"));
    assert!(!d.join("model.json").exists());

    std::fs::write(d.join("bad.toml"), "[split]\ntrain_fraction = 2.0\n").unwrap();
    let out = mmlda(d, &["--config", "bad.toml", "generate"]);
    assert!(!out.status.success());
    assert!(serde_json::from_slice::<serde_json::Value>(&out.stderr).is_ok());

    // A snapshot from a future schema is refused.
    let c = config.to_str().unwrap();
    ok(
        d,
        &[
            "--config",
            c,
            "generate",
            "--days",
            "2",
            "--out",
            "data.jsonl",
        ],
    );
    std::fs::write(d.join("future.json"), r#"{"schema_version":99}"#).unwrap();
    let out = mmlda(
        d,
        &[
            "evaluate",
            "--model",
            "future.json",
            "--dataset",
            "data.jsonl",
        ],
    );
    assert!(!out.status.success());
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    let text = record.to_string();
    assert!(text.contains("schema version"), "{text}");
}
