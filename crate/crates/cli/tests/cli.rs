use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn stochflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochflow")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(dir: &TempDir, body: &str, out: &str, extra: &[&str]) -> Output {
    let cfg = write_config(dir.path(), body);
    let out = dir.path().join(out);
    let mut args = vec!["--config", &cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    stochflow(&args)
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

const SMALL_PULLBACK: &str = r#"
kind = "pullback"
seed = 3
ensemble = 8

[model]
name = "linear"
level = 6

[schedule]
depth = 6

[measure]
particles = 128
"#;

#[test]
fn oracle_suite_passes_exactly() {
    let dir = TempDir::new().unwrap();
    let out = run(&dir, "kind = \"oracle\"\nseed = 0\n", "o", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("all exact checks pass"));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["diagnostics"]["message"], "all exact checks pass");
    let verdicts = summary["verdicts"].as_array().unwrap();
    assert!(verdicts.len() >= 14);
    assert!(verdicts.iter().all(|v| v["passed"] == true && v["invariant"].as_str().unwrap().contains("::")));
}

#[test]
fn unknown_kind_exits_two_naming_the_key() {
    let dir = TempDir::new().unwrap();
    let out = run(&dir, "kind = \"frobnicate\"\nseed = 1\n", "x", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`kind`") && err.contains("frobnicate"), "{err}");
    assert!(!dir.path().join("x").exists());
}

#[test]
fn unknown_model_and_missing_seed_exit_two() {
    let dir = TempDir::new().unwrap();
    let out = run(&dir, "kind = \"pullback\"\nseed = 1\n[model]\nname = \"lorenz\"\n", "x", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.name"));
    let out = run(&dir, "kind = \"oracle\"\n", "y", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`seed`"));
    let out = run(&dir, "kind = \"oracle\"\n", "y", &["--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn failed_check_exits_one_and_lists_it() {
    let dir = TempDir::new().unwrap();
    let body = SMALL_PULLBACK.replace("depth = 6", "depth = 1");
    let out = run(&dir, &body, "p", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("esm::pullback_measure.converges"));
}

#[test]
fn identical_config_and_seed_give_identical_files() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&dir, SMALL_PULLBACK, "a", &[]).status.code(), Some(0));
    assert_eq!(run(&dir, SMALL_PULLBACK, "b", &["--jobs", "1"]).status.code(), Some(0));
    let (a, b) = (files(&dir.path().join("a")), files(&dir.path().join("b")));
    assert_eq!(a.iter().map(|f| &f.0).collect::<Vec<_>>(), ["diagnostics.csv", "limits.csv", "measure_0.csv", "summary.json"]);
    assert_eq!(a, b);

    assert_eq!(run(&dir, SMALL_PULLBACK, "c", &["--seed", "4"]).status.code(), Some(0));
    let c = files(&dir.path().join("c"));
    assert_ne!(a[1], c[1]);
}

#[test]
fn lists_every_experiment() {
    let out = stochflow(&["--list-experiments"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for kind in ["noise", "pullback", "attractor", "esm-verify", "oracle", "nse", "counterexamples"] {
        assert!(text.lines().any(|l| l.starts_with(kind)), "{kind} missing");
    }
}

#[test]
fn counterexample_scenarios_are_addressable_by_name() {
    let dir = TempDir::new().unwrap();
    let body = "kind = \"counterexamples\"\nseed = 0\n[counterexamples]\nscenario = \"remark-shift\"\n";
    let out = run(&dir, body, "s", &[]);
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("s/scenarios.csv")).unwrap();
    assert!(table.lines().skip(1).all(|l| l.starts_with("remark-shift,")));
    let out = run(&dir, &body.replace("remark-shift", "remark-none"), "t", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("counterexamples.scenario"));
}

#[test]
fn noise_experiment_writes_its_tables() {
    let dir = TempDir::new().unwrap();
    let body = "kind = \"noise\"\nseed = 9\nensemble = 2000\n[noise]\nlevel = 4\nhorizon = 2\nintervals = 200\n";
    let out = run(&dir, body, "n", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let path = fs::read_to_string(dir.path().join("n/path.csv")).unwrap();
    assert_eq!(path.lines().count(), 1 + 2 * 16 + 1);
    assert!(path.lines().nth(1).unwrap().ends_with(",0.0000000000000000e0"));
}
