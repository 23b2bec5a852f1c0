use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn manifest(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("manifests").join(format!("{name}.json"))
}

fn curvquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvquant")).args(args).output().expect("binary runs")
}

fn run_on(cmd: &str, name: &str, extra: &[&str]) -> Output {
    let m = manifest(name);
    let mut args = vec![cmd, "--manifest", m.to_str().unwrap()];
    args.extend_from_slice(extra);
    curvquant(&args)
}

#[test]
fn reports_written_to_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest("polar");
    let paths: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("r{i}.json"))).collect();
    for p in &paths {
        let out = curvquant(&[
            "verify",
            "--manifest",
            m.to_str().unwrap(),
            "--observable",
            "q1*p1",
            "--seed",
            "9",
            "--output",
            p.to_str().unwrap(),
        ]);
        // x·∂ₓ-type observables are not symmetric, so the report fails.
        assert_eq!(out.status.code(), Some(1));
        assert!(out.stdout.is_empty());
    }
    let (a, b) = (std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["schema"], "curvquant.report/1");
    assert_eq!(v["seed"], 9);
    assert_eq!(v["status"], "fail");
    assert!(v.get("wall_clock_seconds").is_none());
}

#[test]
fn text_format_lists_claims() {
    let out = run_on("verify", "sphere", &["--format", "text", "--observable", "p_phi"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for claim in ["commutation", "jacobi", "symmetry", "scheme-gap", "curvature-shift", "nonflat-control"] {
        assert!(text.contains(&format!("PASS {claim}")), "{claim} missing from\n{text}");
    }
}

#[test]
fn timing_is_opt_in() {
    let out = run_on("curvature", "euclidean1", &["--timing"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["wall_clock_seconds"].is_number());
}

#[test]
fn shift_reports_the_curvature_gap() {
    let out = run_on("shift", "sphere", &["--grid", "12,24", "--eigs", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = &v["result"]["shift"];
    assert_eq!(r["expected_delta"].as_f64().unwrap(), 0.166666666667);
    assert!(r["deltas"].as_array().unwrap().iter().all(|d| (d.as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-6));
}

#[test]
fn load_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"schema": "curvquant.manifest/1", "name": "bad",
            "coordinates": [{"name": "x", "min": 0, "max": 1}],
            "metric": [["sin("]], "constants": {"hbar": 1}}"#,
    )
    .unwrap();
    let out = curvquant(&["curvature", "--manifest", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("metric[0][0]"), "{err}");

    let missing = dir.path().join("missing.json");
    assert_eq!(curvquant(&["verify", "--manifest", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(curvquant(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run_on("verify", "sphere", &["--scheme", "k=x"]).status.code(), Some(2));
    assert_eq!(run_on("quantize", "euclidean2", &["--observable", "p1^2"]).status.code(), Some(2));
    assert_eq!(run_on("spectrum", "sphere", &["--grid", "0"]).status.code(), Some(2));
    assert_eq!(curvquant(&["--help"]).status.code(), Some(0));
}

#[test]
fn quantize_prints_the_operator() {
    let out = run_on("quantize", "euclidean2", &["--observable", "q2*p1 - q1*p2", "--scheme", "mod"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["options"]["scheme"], "mod");
    assert_eq!(v["command"], "quantize");
}
