use std::path::PathBuf;
use std::process::{Command, Output};

fn argstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_argstab"))
        .args(args)
        .output()
        .unwrap()
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small_config(dir: &std::path::Path) -> PathBuf {
    let text = std::fs::read_to_string(configs().join("ridge.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["n_grid"] = serde_json::json!([10, 20]);
    v["budgets"] = serde_json::json!({ "replacements": 2, "draws": 64, "center_replicates": 8, "trials": 100 });
    let path = dir.join("small.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path
}

#[test]
fn bounds_prints_breakdown_json() {
    let out = argstab(&[
        "bounds",
        configs().join("bounds-thm2.json").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["name"], "thm2");
    assert!((v["total"].as_f64().unwrap() - 0.27898).abs() < 1e-4);
}

#[test]
fn bounds_csv_has_total_row() {
    let out = argstab(&[
        "bounds",
        configs().join("bounds-thm2.json").to_str().unwrap(),
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("term,value\n"));
    assert!(text.contains("\ntotal,"));
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{ "bound": "cor1", "l": 1 }"#).unwrap();
    assert_eq!(
        argstab(&["bounds", bad.to_str().unwrap()]).status.code(),
        Some(1)
    );
    std::fs::write(
        &bad,
        r#"{ "bound": "cor1", "l": 1, "b": 1, "m": 1, "delta": 2, "alpha": 0.1, "n": 10 }"#,
    )
    .unwrap();
    assert_eq!(
        argstab(&["bounds", bad.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn missing_file_exits_with_two() {
    assert_eq!(
        argstab(&["bounds", "/nonexistent/constants.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn experiment_run_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out_dir = dir.path().join("out");
    let run = argstab(&[
        "experiment",
        "run",
        config.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(summary["status"]["state"], "complete");
    for f in [
        "report.json",
        "plot_rate.csv",
        "plot_coverage.csv",
        "plot_bound-vs-gap.csv",
        "stability_n10.csv",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let report = out_dir.join("report.json");
    assert!(
        argstab(&["experiment", "validate", report.to_str().unwrap()])
            .status
            .success()
    );

    let text = std::fs::read_to_string(&report).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["records"][0]["gaps"]["plain"] = serde_json::json!(42.0);
    std::fs::write(&report, v.to_string()).unwrap();
    assert_eq!(
        argstab(&["experiment", "validate", report.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let run = |seed: &str| {
        let out = argstab(&["stability", config.to_str().unwrap(), "--seed", seed]);
        assert!(out.status.success());
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["stability"]["alpha_hat"].as_f64().unwrap()
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}

#[test]
fn complexity_and_concentrate_emit_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = argstab(&["complexity", config.to_str().unwrap(), "--format", "csv"]);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("n,mean,std_error,draws,r,delta\n"));
    let out = argstab(&[
        "concentrate",
        "pinelis",
        "--eps",
        "3",
        "--trials",
        "1000",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let out = argstab(&[
        "concentrate",
        "lemma1",
        config.to_str().unwrap(),
        "--trials",
        "50",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["tail"]["trials"], 50);
}

#[test]
fn losscheck_passes_for_shipped_losses() {
    for loss in ["hinge", "logistic", "squared"] {
        let out = argstab(&[
            "losscheck",
            "--loss",
            loss,
            "--points",
            "200",
            "--triples",
            "2000",
        ]);
        assert!(out.status.success(), "{loss}");
    }
}
