//! End-to-end tests of the binary: artifact determinism, library parity,
//! and the exit-code contract (0 success, 1 usage, 2 runtime).

use std::path::Path;
use std::process::{Command, Output};

use refset::data::load_csv;
use refset::{cnn, Metric};

fn refset_cmd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refset"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn select_artifacts_are_deterministic_and_match_the_library() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    assert_success(&refset_cmd(dir, &["dataset", "gen-5-4", "--output", "d.csv"]));
    for output in ["a.json", "b.json"] {
        assert_success(&refset_cmd(
            dir,
            &["select", "cnn", "--input", "d.csv", "--seed", "7", "--output", output],
        ));
    }
    let a = std::fs::read(dir.join("a.json")).unwrap();
    let b = std::fs::read(dir.join("b.json")).unwrap();
    assert_eq!(a, b, "same seed, same bytes");

    let d = load_csv(&dir.join("d.csv")).unwrap();
    let expected = cnn(&d, &Metric::euclidean(), 7).unwrap().to_json_string();
    assert_eq!(a, expected.as_bytes(), "CLI output equals the library call");

    // The sibling report documents a consistent condensed set.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("a.report.json")).unwrap())
            .unwrap();
    assert_eq!(report["method"], "cnn");
    assert_eq!(report["training_accuracy"], 1.0);
    assert_eq!(report["goodness_of_fit"], true);
}

#[test]
fn unknown_methods_and_flags_exit_1_with_the_valid_names() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_success(&refset_cmd(dir, &["dataset", "gen-5-4", "--output", "d.csv"]));

    let out = refset_cmd(dir, &["select", "bogus", "--input", "d.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    for name in ["cnn", "enn", "hybrid", "random", "exhaustive"] {
        assert!(err.contains(name), "usage message lists {name}: {err}");
    }

    // Right method, wrong family.
    let out = refset_cmd(dir, &["select", "kmeans-pre", "--input", "d.csv"]);
    assert_eq!(out.status.code(), Some(1));

    // Unknown flag (clap-level usage error).
    let out = refset_cmd(dir, &["select", "cnn", "--input", "d.csv", "--bogus", "1"]);
    assert_eq!(out.status.code(), Some(1));

    // Unknown method parameter.
    let out = refset_cmd(
        dir,
        &["select", "cnn", "--input", "d.csv", "--params", "{\"k\": 3}"],
    );
    assert_eq!(out.status.code(), Some(1));

    // Format mismatch: reference sets are JSON.
    let out = refset_cmd(dir, &["select", "cnn", "--input", "d.csv", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let out = refset_cmd(dir, &["select", "cnn", "--input", "missing.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!stderr(&out).is_empty());

    // A 2-point dataset cannot support enn with k = 3.
    std::fs::write(dir.join("tiny.csv"), "f0,label\n0,A\n1,B\n").unwrap();
    let out = refset_cmd(dir, &["select", "enn", "--input", "tiny.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_reports_are_deterministic_and_internally_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_success(&refset_cmd(dir, &["dataset", "gen-5-4", "--output", "d.csv"]));

    let args = [
        "eval",
        "nearest-mean",
        "--input",
        "d.csv",
        "--protocol",
        "kfold:3",
        "--lambda",
        "0.25",
        "--seed",
        "3",
        "--output",
        "r.json",
    ];
    assert_success(&refset_cmd(dir, &args));
    let first = std::fs::read(dir.join("r.json")).unwrap();
    assert_success(&refset_cmd(dir, &args));
    assert_eq!(first, std::fs::read(dir.join("r.json")).unwrap());

    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["protocol"], "kfold:3");
    assert_eq!(report["per_fold_accuracy"].as_array().unwrap().len(), 3);
    let j = report["criterion_j"].as_f64().unwrap();
    let expected = 0.25 * (1.0 - report["generalisation_accuracy"].as_f64().unwrap())
        + 0.75 * report["reduction_rate"].as_f64().unwrap();
    assert!((j - expected).abs() < 1e-12);
    assert!(report["wall_time_ms"].is_null());

    let out = refset_cmd(dir, &["eval", "nearest-mean", "--input", "d.csv", "--protocol", "sideways"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fit_scores_a_proportions_table_over_a_gamma_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_success(&refset_cmd(dir, &["dataset", "gen-5-4", "--output", "d.csv"]));
    std::fs::write(
        dir.join("p.csv"),
        "f0,f1,f2,f3,count:A,count:B\n0,0,0,0,9,1\n1,1,1,1,8,2\n0,1,0,1,2,8\n",
    )
    .unwrap();

    assert_success(&refset_cmd(
        dir,
        &[
            "fit",
            "pure-prototype",
            "--input",
            "d.csv",
            "--proportions",
            "p.csv",
            "--gamma-grid",
            "0.5,1,2,4",
            "--output",
            "fit.json",
        ],
    ));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fit.json")).unwrap()).unwrap();
    let best_sse = report["fit_sse"].as_f64().unwrap();
    assert!(best_sse >= 0.0);
    assert!(report["fit_loglik"].as_f64().unwrap() <= 0.0);
    let grid = [0.5, 1.0, 2.0, 4.0];
    assert!(grid.contains(&report["fit_gamma"].as_f64().unwrap()));

    // The grid winner is no worse than plain gamma = 1.
    assert_success(&refset_cmd(
        dir,
        &[
            "fit",
            "pure-prototype",
            "--input",
            "d.csv",
            "--proportions",
            "p.csv",
            "--gamma",
            "1",
            "--output",
            "fit1.json",
        ],
    ));
    let at_one: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fit1.json")).unwrap()).unwrap();
    assert!(best_sse <= at_one["fit_sse"].as_f64().unwrap() + 1e-15);
}

#[test]
fn bench_outputs_do_not_depend_on_the_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_success(&refset_cmd(dir, &["dataset", "gen-5-4", "--output", "d.csv"]));
    std::fs::write(
        dir.join("bench.json"),
        r#"{
            "datasets": [{"name": "structure", "path": "d.csv"}],
            "methods": [{"name": "cnn"}, {"name": "nearest-mean"}, {"name": "vam"}],
            "protocol": {"kind": "kfold", "folds": 3},
            "seed": 4
        }"#,
    )
    .unwrap();

    assert_success(&refset_cmd(
        dir,
        &["bench", "--config", "bench.json", "--output-dir", "out1", "--jobs", "1"],
    ));
    assert_success(&refset_cmd(
        dir,
        &["bench", "--config", "bench.json", "--output-dir", "out2", "--jobs", "4"],
    ));

    let summary1 = std::fs::read(dir.join("out1/summary.csv")).unwrap();
    let summary2 = std::fs::read(dir.join("out2/summary.csv")).unwrap();
    assert_eq!(summary1, summary2);
    assert_eq!(summary1.iter().filter(|&&b| b == b'\n').count(), 4, "header + 3 cells");

    for name in [
        "cell000_structure__cnn.json",
        "cell000_structure__cnn.refset.json",
        "cell002_structure__vam.refset.json",
    ] {
        let a = std::fs::read(dir.join("out1").join(name)).unwrap();
        let b = std::fs::read(dir.join("out2").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between worker counts");
    }
}

#[test]
fn gaussian_datasets_reproduce_from_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let args = [
        "dataset",
        "gaussian",
        "--counts",
        "4,5",
        "--means",
        "0:0,3:3",
        "--sigmas",
        "1,1",
        "--noise",
        "0.1",
        "--seed",
        "5",
        "--output",
        "g.csv",
    ];
    assert_success(&refset_cmd(dir, &args));
    let first = std::fs::read(dir.join("g.csv")).unwrap();
    assert_success(&refset_cmd(dir, &args));
    assert_eq!(first, std::fs::read(dir.join("g.csv")).unwrap());

    let d = load_csv(&dir.join("g.csv")).unwrap();
    assert_eq!(d.len(), 9);
    assert_eq!(d.n_features(), 2);
    assert_eq!(d.categories(), ["A".to_string(), "B".to_string()]);

    let out = refset_cmd(dir, &["dataset", "gen-5-4", "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
}
