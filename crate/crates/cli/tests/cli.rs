use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const QUAD_PAIR: &str = r#"{
  "problem": "quad-pair",
  "dimension": 2,
  "x0": [0.0, 1.0],
  "beta": { "family": "fr", "xi": 0.9 },
  "seed": 7
}"#;

fn mocg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mocg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn with_config(text: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("run.json"), text).unwrap();
    dir
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn column(header: &str, name: &str) -> usize {
    header.split(',').position(|c| c == name).unwrap()
}

#[test]
fn solve_quad_pair_converges() {
    let dir = with_config(QUAD_PAIR);
    let out = mocg(dir.path(), &["solve", "--config", "run.json", "--out", "out", "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let csv = read(&dir.path().join("out"), "trajectory.csv");
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    let last = lines.last().unwrap();
    let norm_v: f64 = last.split(',').nth(column(header, "norm_v")).unwrap().parse().unwrap();
    assert!(norm_v <= 1e-6);
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("out"), "report.json")).unwrap();
    assert_eq!(report["status"], "converged");
}

#[test]
fn max_iters_exits_two() {
    let dir = with_config(&QUAD_PAIR.replace("\"seed\": 7", "\"seed\": 7, \"max_iters\": 1"));
    let out = mocg(dir.path(), &["solve", "--config", "run.json", "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(read(dir.path(), "trajectory.csv").lines().count(), 2);
}

#[test]
fn bad_configs_exit_64_with_line() {
    for (from, to, line) in [
        ("\"fr\"", "\"xyz\"", ":5:"),
        ("\"seed\": 7", "\"seed\": 7, \"safety\": 1.2", ":6:"),
        ("\"seed\": 7", "\"seed\": 7, \"extra\": true", ":6:"),
    ] {
        let dir = with_config(&QUAD_PAIR.replace(from, to));
        let out = mocg(dir.path(), &["solve", "--config", "run.json"]);
        assert_eq!(out.status.code(), Some(64));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(&format!("run.json{line}")), "{err}");
    }
    let dir = with_config(QUAD_PAIR);
    assert_eq!(mocg(dir.path(), &["solve"]).status.code(), Some(64));
    assert_eq!(mocg(dir.path(), &["frobnicate"]).status.code(), Some(64));
}

#[test]
fn compare_is_deterministic_and_counts_evaluations() {
    let dir = with_config(QUAD_PAIR);
    let run = |sub: &str| {
        let out = mocg(dir.path(), &["compare", "--config", "run.json", "--out", sub, "--quiet"]);
        assert_eq!(out.status.code(), Some(0));
        read(&dir.path().join(sub), "comparison.json")
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["fixed"]["stepsize_objective_evals"], 0);
    assert!(v["baseline"]["stepsize_objective_evals"].as_u64().unwrap() > 0);
    assert_eq!(v["fixed"]["status"], "converged");
    assert_eq!(v["baseline"]["status"], "converged");
}

#[test]
fn pareto_front_is_reproducible_and_on_the_segment_image() {
    let cfg = QUAD_PAIR.replace("  \"x0\": [0.0, 1.0],\n", "").replace("\"seed\": 7", "\"seed\": 7, \"starts\": 100");
    let dir = with_config(&cfg);
    let run = |sub: &str| {
        let out = mocg(dir.path(), &["pareto", "--config", "run.json", "--out", sub, "--quiet"]);
        assert_eq!(out.status.code(), Some(0));
        read(&dir.path().join(sub), "front.csv")
    };
    let csv = run("a");
    assert_eq!(csv, run("b"));
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    let (fs, f1, f2) = (column(header, "status"), column(header, "f1"), column(header, "f2"));
    let mut converged = 0;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells[fs] != "converged" {
            continue;
        }
        converged += 1;
        let (a, b): (f64, f64) = (cells[f1].parse().unwrap(), cells[f2].parse().unwrap());
        // Image of (s, 0): (½(1-s)², ½(1+s)²), so sqrt(2a) + sqrt(2b) = 2.
        assert!(((2.0 * a).sqrt() + (2.0 * b).sqrt() - 2.0).abs() < 1e-4);
    }
    assert!(converged >= 95);
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.path().join("a"), "front_summary.json")).unwrap();
    assert_eq!(summary["converged"], converged);
}

#[test]
fn single_start_gives_one_row() {
    let dir = with_config(&QUAD_PAIR.replace("\"seed\": 7", "\"seed\": 7, \"starts\": 1"));
    let out = mocg(dir.path(), &["pareto", "--config", "run.json", "--quiet", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read(dir.path(), "front.csv").lines().count(), 2);
}

#[test]
fn check_scopes_and_fixture() {
    let dir = TempDir::new().unwrap();
    let out = mocg(dir.path(), &["check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    for suite in ["problem", "subproblem", "stepsize", "directions", "solver"] {
        assert!(text.contains(&format!("[PASS] {suite}")), "{text}");
    }

    let out = mocg(dir.path(), &["check", "subproblem"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).matches("[PASS]").count(), 1);

    let out = mocg(dir.path(), &["check", "--fixture", "broken-gradient"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL gradient broken-gradient"));

    assert_eq!(mocg(dir.path(), &["check", "nope"]).status.code(), Some(64));
}
