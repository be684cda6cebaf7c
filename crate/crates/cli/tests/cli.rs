//! End-to-end tests of the `secnav` binary: exit codes, file outputs, and
//! determinism.

use std::path::Path;
use std::process::{Command, Output};

fn secnav(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secnav"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SECNAV_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Scenario with a single two-cluster path, for row-accounting tests.
fn write_single_path_scenario(path: &Path) {
    let text = r#"{
  "version": 1,
  "map": { "width": 120.0, "height": 60.0 },
  "landmarks": [
    { "id": 0, "x": 10.0, "y": 24.0, "cluster": 0 },
    { "id": 1, "x": 16.0, "y": 30.0, "cluster": 0 },
    { "id": 2, "x": 10.0, "y": 36.0, "cluster": 0 },
    { "id": 3, "x": 4.0, "y": 30.0, "cluster": 0 },
    { "id": 4, "x": 80.0, "y": 24.0, "cluster": 1 },
    { "id": 5, "x": 86.0, "y": 30.0, "cluster": 1 },
    { "id": 6, "x": 80.0, "y": 36.0, "cluster": 1 },
    { "id": 7, "x": 74.0, "y": 30.0, "cluster": 1 }
  ],
  "obstacles": [],
  "paths": [
    { "class": 1, "cluster_sequence": [0, 1], "margin": 5.0, "segment_len": 20.0 }
  ]
}
"#;
    std::fs::write(path, text).unwrap();
}

#[test]
fn generate_is_deterministic_and_validates_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = secnav(&["generate", "--out", "a.json", "--seed", "9"], dir.path());
    assert!(out.status.success(), "{out:?}");
    let out2 = secnav(&["generate", "--out", "b.json", "--seed", "9"], dir.path());
    assert!(out2.status.success());
    assert_eq!(
        read(&dir.path().join("a.json")),
        read(&dir.path().join("b.json")),
        "same seed must produce byte-identical scenarios"
    );
    let text = read(&dir.path().join("a.json"));
    assert!(text.contains("\"width\": 200.0"));
    assert!(text.contains("\"height\": 200.0"));

    let bad = secnav(&["generate", "--out", "c.json", "--width", "0"], dir.path());
    assert_eq!(bad.status.code(), Some(2), "config error exits 2");
}

#[test]
fn run_writes_one_row_per_trial_and_approach() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("one.json");
    write_single_path_scenario(&scenario);
    let out = secnav(
        &[
            "run",
            "--scenario",
            "one.json",
            "--trials",
            "10",
            "--seed",
            "3",
            "--out",
            "res",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = read(&dir.path().join("res/trials.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "trial,path_class,path_id,approach,percent_error,ade,fde,reached_goal,safety_violations,steps"
    );
    assert_eq!(lines.len(), 1 + 20, "10 trials x 2 approaches x 1 path");
    assert!(dir.path().join("res/summary.csv").exists());
    assert!(dir.path().join("res/config.json").exists());
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("one.json");
    write_single_path_scenario(&scenario);
    for (out_dir, jobs) in [("r1", "1"), ("r2", "3")] {
        let out = secnav(
            &[
                "run",
                "--scenario",
                "one.json",
                "--trials",
                "8",
                "--seed",
                "11",
                "--jobs",
                jobs,
                "--out",
                out_dir,
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    assert_eq!(
        read(&dir.path().join("r1/trials.csv")),
        read(&dir.path().join("r2/trials.csv")),
        "identical seed and config must give byte-identical CSV"
    );
    assert_eq!(
        read(&dir.path().join("r1/summary.csv")),
        read(&dir.path().join("r2/summary.csv"))
    );
}

#[test]
fn approach_filter_limits_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("one.json");
    write_single_path_scenario(&scenario);
    let out = secnav(
        &[
            "run",
            "--scenario",
            "one.json",
            "--trials",
            "4",
            "--approach",
            "2",
            "--out",
            "res",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = read(&dir.path().join("res/trials.csv"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("2")));
    let summary = read(&dir.path().join("res/summary.csv"));
    assert!(summary.contains(",NA,"), "absent approach reported as NA");
}

#[test]
fn run_reports_missing_scenario_as_scenario_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = secnav(
        &["run", "--scenario", "nope.json", "--trials", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_rejects_zero_trials() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("one.json");
    write_single_path_scenario(&scenario);
    let out = secnav(
        &["run", "--scenario", "one.json", "--trials", "0"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_renders_svgs_and_ignores_empty_results() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("one.json");
    write_single_path_scenario(&scenario);
    let run = secnav(
        &[
            "run",
            "--scenario",
            "one.json",
            "--trials",
            "3",
            "--out",
            "res",
        ],
        dir.path(),
    );
    assert!(run.status.success());
    let plot = secnav(
        &["plot", "--results", "res", "--scenario", "one.json"],
        dir.path(),
    );
    assert!(
        plot.status.success(),
        "{}",
        String::from_utf8_lossy(&plot.stderr)
    );
    for name in [
        "map_class_1.svg",
        "metrics_percent_error.svg",
        "metrics_ade.svg",
        "metrics_fde.svg",
    ] {
        let svg = read(&dir.path().join("res").join(name));
        assert!(svg.starts_with("<svg"), "{name} must be an SVG document");
    }

    // Empty results directory: warning, no-op, success.
    std::fs::create_dir_all(dir.path().join("empty")).unwrap();
    let noop = secnav(
        &["plot", "--results", "empty", "--scenario", "one.json"],
        dir.path(),
    );
    assert!(noop.status.success());
    assert!(String::from_utf8_lossy(&noop.stderr).contains("warning"));
    assert!(!dir.path().join("empty/metrics_ade.svg").exists());
}

#[test]
fn summary_is_recomputable_from_trial_rows() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("one.json");
    write_single_path_scenario(&scenario);
    let out = secnav(
        &[
            "run",
            "--scenario",
            "one.json",
            "--trials",
            "6",
            "--seed",
            "2",
            "--out",
            "res",
        ],
        dir.path(),
    );
    assert!(out.status.success());

    // Recompute the approach-1 mean percent error for class 1 from rows.
    let trials = read(&dir.path().join("res/trials.csv"));
    let vals: Vec<f64> = trials
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[1] == "1" && f[3] == "1")
        .map(|f| f[4].parse::<f64>().unwrap())
        .collect();
    assert_eq!(vals.len(), 6);
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;

    let summary = read(&dir.path().join("res/summary.csv"));
    let line = summary
        .lines()
        .find(|l| l.starts_with("percent_error,PC1,"))
        .expect("summary row exists");
    let reported: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
    assert!(
        (reported - mean).abs() < 5e-5,
        "summary {reported} vs recomputed {mean}"
    );
}

#[test]
fn plot_covers_all_three_builtin_classes() {
    let dir = tempfile::tempdir().unwrap();
    let gen = secnav(&["generate", "--out", "builtin.json"], dir.path());
    assert!(gen.status.success());
    let run = secnav(
        &[
            "run",
            "--scenario",
            "builtin.json",
            "--trials",
            "2",
            "--out",
            "res",
        ],
        dir.path(),
    );
    assert!(run.status.success());
    let plot = secnav(
        &["plot", "--results", "res", "--scenario", "builtin.json"],
        dir.path(),
    );
    assert!(plot.status.success());
    for class in 1..=3 {
        assert!(
            dir.path()
                .join(format!("res/map_class_{class}.svg"))
                .exists(),
            "class {class} map must be rendered"
        );
    }
    // Each metric chart carries one bar per class and approach.
    let bars = read(&dir.path().join("res/metrics_ade.svg"));
    assert!(bars.starts_with("<svg"));
}

#[test]
fn out_dir_env_var_sets_default_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_secnav"))
        .args(["generate", "--seed", "5"])
        .current_dir(dir.path())
        .env("SECNAV_OUT_DIR", "from_env")
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    assert!(dir.path().join("from_env/scenario.json").exists());
}
