use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sparse_hawkes::EventSeries;
use sparse_hawkes_harness::cli::run_cli;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparse-hawkes"))
        .args(args)
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    let mut v = vec!["sparse-hawkes"];
    v.extend_from_slice(args);
    run_cli(v)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate_three(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("series.json");
    let args = [
        "simulate",
        "--alpha",
        "2",
        "--delta",
        "3",
        "--events",
        "20",
        "--count",
        "3",
        "--seed",
        "1",
        "--out",
        p(&out),
    ];
    assert_eq!(code(&args), 0);
    out
}

#[test]
fn simulate_is_reproducible_and_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate_three(dir.path());
    let first = fs::read_to_string(&a).unwrap();
    simulate_three(dir.path());
    assert_eq!(first, fs::read_to_string(&a).unwrap());
    let series: Vec<EventSeries> = serde_json::from_str(&first).unwrap();
    assert_eq!(series.len(), 3);
    assert!(series.iter().all(|s| s.len() == 20 && s.times()[0] == 0.0));
}

#[test]
fn analysis_commands_run_on_simulated_series() {
    let dir = tempfile::tempdir().unwrap();
    let s = simulate_three(dir.path());
    let sel = dir.path().join("select.csv");
    assert_eq!(code(&["select", "--series", p(&s), "--out", p(&sel)]), 0);
    let text = fs::read_to_string(&sel).unwrap();
    assert!(text.starts_with("id,n_events,loglik_hawkes,loglik_poisson,delta_criterion,verdict"));
    assert_eq!(text.lines().count(), 4);

    let aug = dir.path().join("aug.csv");
    assert_eq!(
        code(&[
            "augment",
            "--series",
            p(&s),
            "--anchor",
            "series-0",
            "--out",
            p(&aug)
        ]),
        0
    );
    let text = fs::read_to_string(&aug).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("series-0,"));

    for cmd in ["fit", "similarity"] {
        let out = dir.path().join(format!("{cmd}.out"));
        assert_eq!(
            code(&[cmd, "--series", p(&s), "--out", p(&out)]),
            0,
            "{cmd}"
        );
        assert!(!fs::read_to_string(&out).unwrap().is_empty());
    }
    let pooled = dir.path().join("pooled.out");
    assert_eq!(
        code(&["fit", "--series", p(&s), "--pooled", "--out", p(&pooled)]),
        0
    );
}

#[test]
fn unknown_anchor_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = simulate_three(dir.path());
    assert_ne!(
        code(&["augment", "--series", p(&s), "--anchor", "nobody"]),
        0
    );
}

const REPORTS: &str = "subject_id,timestamp,pain_level
a,2024-01-01T00:00:00Z,3
a,2024-01-02T06:00:00Z,4
a,2024-01-03T00:00:00Z,0
a,2024-01-04T00:00:00Z,2
b,2024-01-01T00:00:00Z,2
b,2024-01-01T12:00:00Z,5
b,2024-01-05T12:00:00Z,1
";

#[test]
fn ingest_round_trip_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("reports.csv");
    fs::write(&raw, REPORTS).unwrap();
    let first = dir.path().join("first.csv");
    assert_eq!(
        code(&["ingest", p(&raw), "--emit", "csv", "--out", p(&first)]),
        0
    );
    let second = dir.path().join("second.csv");
    assert_eq!(
        code(&[
            "ingest",
            p(&first),
            "--numeric-unit",
            "days",
            "--emit",
            "csv",
            "--out",
            p(&second)
        ]),
        0
    );
    assert_eq!(
        fs::read_to_string(&first).unwrap(),
        fs::read_to_string(&second).unwrap()
    );

    let json = dir.path().join("series.json");
    assert_eq!(code(&["ingest", p(&raw), "--out", p(&json)]), 0);
    let series: Vec<EventSeries> =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(series[0].id(), "a");
    assert_eq!(series[0].times(), &[0.0, 1.25, 3.0]);
    assert_eq!(series[1].times(), &[0.0, 0.5, 4.5]);
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let dup = dir.path().join("dup.csv");
    fs::write(&dup, "subject_id,timestamp,pain_level\na,10,3\na,10,4\n").unwrap();
    let out = bin(&["ingest", p(&dup)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lines 2 and 3"));
    assert_eq!(
        bin(&["ingest", p(&dup), "--merge-duplicates"])
            .status
            .code(),
        Some(0)
    );

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "subject_id,timestamp,pain_level\na,10,11\n").unwrap();
    assert_eq!(bin(&["ingest", p(&bad)]).status.code(), Some(2));

    assert_eq!(bin(&["simulate", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        bin(&["simulate", "--alpha", "5", "--delta", "1", "--events", "5"])
            .status
            .code(),
        Some(1)
    );

    let out = dir.path().join("ridge");
    let args = [
        "experiment",
        "ridge",
        "--set",
        "n_events=10000",
        "--set",
        "search_limit=3",
        "--out",
        p(&out),
    ];
    assert_eq!(bin(&args).status.code(), Some(3));
}

#[test]
fn experiment_writes_manifest_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let args = [
            "experiment",
            "critical_n",
            "--seed",
            "7",
            "--trials",
            "3",
            "--set",
            "grid=[5,20]",
            "--set",
            "starts=2",
            "--out",
            p(&out),
        ];
        assert_eq!(code(&args), 0);
        out
    };
    let (a, b) = (run("a"), run("b"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "critical_n");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["trials"], 3);
    assert!(manifest["rng"].as_str().unwrap().contains("ChaCha8"));
    assert!(manifest["git_describe"].is_string());
    assert_eq!(manifest["params"]["grid"], serde_json::json!([5, 20]));
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for f in outputs {
        let name = Path::new(f.as_str().unwrap()).file_name().unwrap();
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn experiment_config_file_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ridge.json");
    fs::write(&cfg, r#"{"experiment": "ridge", "seed": 3, "overrides": {"alpha_points": 5, "delta_points": 4}}"#).unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        code(&["experiment", "ridge", "--config", p(&cfg), "--out", p(&out)]),
        0
    );
    let grid = fs::read_to_string(out.join("ridge_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 21);
    assert_eq!(
        code(&[
            "experiment",
            "ridge",
            "--set",
            "nonsense=1",
            "--out",
            p(&out)
        ]),
        1
    );
}
