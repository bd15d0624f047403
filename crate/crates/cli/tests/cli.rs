//! End-to-end checks of the binary: pipelines, determinism, exit codes.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_urysohn"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn simulate_zero_control_gives_zero_output() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "simulate",
            "--control",
            "zero",
            "--t-max",
            "20",
            "--out-dir",
            "z",
        ],
        dir.path(),
    );
    let text = fs::read_to_string(dir.path().join("z/output.csv")).unwrap();
    for line in text.lines().skip(1) {
        let value = line.split(',').nth(1).unwrap();
        assert_eq!(value.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--control",
        "discrete",
        "--seed",
        "7",
        "--t-max",
        "30",
    ];
    run_ok(&[&args[..], &["--out-dir", "a"]].concat(), dir.path());
    run_ok(&[&args[..], &["--out-dir", "b"]].concat(), dir.path());
    for file in [
        "control.csv",
        "output.csv",
        "control_coarse.csv",
        "output_coarse.csv",
    ] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn simulate_walk_control_stays_bounded() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "simulate",
            "--control",
            "walk",
            "--walk-rate",
            "0.05",
            "--t-max",
            "100",
            "--seed",
            "5",
            "--out-dir",
            "w",
        ],
        dir.path(),
    );
    let text = fs::read_to_string(dir.path().join("w/control.csv")).unwrap();
    for line in text.lines().skip(1) {
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(
            (0.0..=1.0).contains(&value),
            "walk value {value} out of range"
        );
    }
}

#[test]
fn identify_then_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "simulate",
            "--control",
            "discrete",
            "--seed",
            "11",
            "--t-max",
            "500",
            "--out-dir",
            "sim",
        ],
        dir.path(),
    );
    let out = run_ok(
        &[
            "identify",
            "--input",
            "sim/control_coarse.csv",
            "--output",
            "sim/output_coarse.csv",
            "--rows",
            "8",
            "--cols",
            "11",
            "--out-dir",
            "ident",
        ],
        dir.path(),
    );
    let report = stdout_json(&out);
    // Full coverage: every one of the 11 columns touched.
    assert_eq!(report["untouched_columns"].as_array().unwrap().len(), 0);
    assert_eq!(report["identified_range"][0], 1);
    assert_eq!(report["identified_range"][1], 11);

    let out = run_ok(
        &[
            "validate",
            "--model",
            "ident/model.json",
            "--input",
            "sim/control_coarse.csv",
            "--reference",
            "sim/output_coarse.csv",
            "--out-dir",
            "val",
        ],
        dir.path(),
    );
    let report = stdout_json(&out);
    let error = report["error"].as_f64().unwrap();
    assert!(error < 0.2, "in-sample error suspiciously large: {error}");
    assert_eq!(report["metric"], "l1");
}

#[test]
fn validate_reports_zero_for_exact_reference() {
    let dir = tempfile::tempdir().unwrap();
    // A zero model predicts zero everywhere; a zero reference matches it.
    fs::write(
        dir.path().join("model.json"),
        r#"{"m":2,"n":3,"x_min":0.0,"x_max":1.0,"matrix":[0.0,0.0,0.0,0.0,0.0,0.0]}"#,
    )
    .unwrap();
    let mut input = String::from("t,value\n");
    let mut reference = String::from("t,value\n");
    for i in 0..10 {
        input.push_str(&format!("{},0.5\n", i));
        reference.push_str(&format!("{},0\n", i));
    }
    fs::write(dir.path().join("input.csv"), input).unwrap();
    fs::write(dir.path().join("reference.csv"), reference).unwrap();
    let out = run_ok(
        &[
            "validate",
            "--model",
            "model.json",
            "--input",
            "input.csv",
            "--reference",
            "reference.csv",
        ],
        dir.path(),
    );
    assert_eq!(stdout_json(&out)["error"].as_f64().unwrap(), 0.0);
}

#[test]
fn validate_counts_excursion_invalidity() {
    let dir = tempfile::tempdir().unwrap();
    // m = 2, n = 3; the column for level 3 was never updated. One excursion
    // to level 3 invalidates exactly m windows.
    fs::write(
        dir.path().join("model.json"),
        r#"{"m":2,"n":3,"x_min":0.0,"x_max":1.0,"matrix":[1.0,2.0,0.0,3.0,4.0,0.0],"counters":[5,5,0,5,5,0]}"#,
    )
    .unwrap();
    let mut input = String::from("t,value\n");
    let mut reference = String::from("t,value\n");
    for i in 0..12 {
        let x = if i == 5 { 1.0 } else { 0.0 };
        input.push_str(&format!("{i},{x}\n"));
        reference.push_str(&format!("{i},0\n"));
    }
    fs::write(dir.path().join("input.csv"), input).unwrap();
    fs::write(dir.path().join("reference.csv"), reference).unwrap();
    let out = run_ok(
        &[
            "validate",
            "--model",
            "model.json",
            "--input",
            "input.csv",
            "--reference",
            "reference.csv",
        ],
        dir.path(),
    );
    let report = stdout_json(&out);
    // 1 warm-up sample plus the m = 2 windows touching the excursion.
    assert_eq!(report["invalid_samples"], 3);
    assert_eq!(report["warmup_samples"], 1);
}

#[test]
fn identify_rejects_alpha_zero_with_usage_exit() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("xy.csv"),
        "t,x,y\n0,0.1,0\n1,0.2,0\n1,0.3,0\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "identify", "--pairs", "xy.csv", "--alpha", "0", "--rows", "2", "--cols", "3",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn malformed_csv_gives_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.csv"),
        "t,value\n0,1.0\n1,not-a-number\n",
    )
    .unwrap();
    fs::write(dir.path().join("y.csv"), "t,value\n0,0.0\n1,0.0\n").unwrap();
    let out = bin()
        .args([
            "identify", "--input", "bad.csv", "--output", "y.csv", "--rows", "1", "--cols", "2",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn stream_mode_identifies_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = bin()
        .args([
            "identify",
            "--stream",
            "--rows",
            "1",
            "--cols",
            "2",
            "--checkpoint-every",
            "4",
            "--model-out",
            "stream_model.json",
        ])
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let stdin = child.stdin.as_mut().unwrap();
        // Memoryless two-level system: y = 1 at level 1, y = 3 at level 2.
        for _ in 0..8 {
            stdin.write_all(b"0.0,1.0\n1.0,3.0\n").unwrap();
        }
    }
    let out = child.wait_with_output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("stream_model.json")).unwrap())
            .unwrap();
    let matrix = model["matrix"].as_array().unwrap();
    assert!((matrix[0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((matrix[1].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert_eq!(model["counters"].as_array().unwrap().len(), 2);
}

#[test]
fn table_single_replication_leaves_ci_empty() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "table",
            "t1",
            "--cells",
            "m=4:n=11",
            "--reps",
            "1",
            "--seed",
            "3",
            "--out-dir",
            "tab",
        ],
        dir.path(),
    );
    let summary = fs::read_to_string(dir.path().join("tab/summary.csv")).unwrap();
    let row = summary.lines().nth(1).unwrap();
    assert!(row.ends_with(','), "CI column should be empty: {row}");
    assert!(row.starts_with("continuous_control,4,11,1,0,1,"));
    let runs = fs::read_to_string(dir.path().join("tab/runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 2);
}

#[test]
fn analyze_rank_matches_formula() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(
        &["analyze", "rank", "--rows", "2", "--cols", "3"],
        dir.path(),
    );
    let report = stdout_json(&out);
    assert_eq!(report["rank"], 5);
    assert_eq!(report["independent_entries"], 5);
}

#[test]
fn analyze_classify_detects_hammerstein() {
    let dir = tempfile::tempdir().unwrap();
    // Rank-1: outer product of (1, 0.5) and a nonlinear profile.
    fs::write(
        dir.path().join("rank1.json"),
        r#"{"m":2,"n":4,"x_min":0.0,"x_max":1.0,"matrix":[0.0,0.1,0.4,0.9,0.0,0.05,0.2,0.45]}"#,
    )
    .unwrap();
    let out = run_ok(
        &["analyze", "classify", "--model", "rank1.json"],
        dir.path(),
    );
    assert_eq!(stdout_json(&out)["class"], "hammerstein");
}

#[test]
fn analyze_describability_flags_feedback_plant() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(
        &[
            "analyze",
            "describability",
            "--plant",
            "feedback",
            "--rows",
            "3",
            "--cols",
            "4",
        ],
        dir.path(),
    );
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], false);
    assert!(report["max_memory_violation"].as_f64().unwrap() > 1e-9);
}

#[test]
fn replay_reproduces_data_outputs() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "simulate",
            "--control",
            "discrete",
            "--seed",
            "9",
            "--t-max",
            "30",
            "--out-dir",
            "run",
        ],
        dir.path(),
    );
    let before = fs::read(dir.path().join("run/output.csv")).unwrap();
    fs::remove_file(dir.path().join("run/output.csv")).unwrap();
    run_ok(&["replay", "run/manifest.json"], dir.path());
    let after = fs::read(dir.path().join("run/output.csv")).unwrap();
    assert_eq!(before, after);
}
