use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wente(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wente"))
        .args(args)
        .env_remove("WENTE_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

#[test]
fn report_estimate_for_three_halves() {
    let v = json(&wente(&["report", "--surface", "3/2", "--m", "181"]));
    assert_eq!(v["schema"], "wente-report");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["m"], 181);
    assert_eq!(v["config"]["mean_curvature"], 0.5);
    let r = &v["results"][0]["report"];
    assert_eq!(r["surface"], "3/2");
    assert_eq!(r["index_estimate"], serde_json::json!([10, 11]));
    assert_eq!(r["subspace_lower"], 8);
    assert_eq!(r["sandwich_upper"], 213);
    assert!(r["provenance"].get("cache_hit").is_none());
}

#[test]
fn identical_runs_are_byte_identical_and_reparse_losslessly() {
    let args = ["report", "--surface", "4/3", "--m", "41"];
    let a = stdout(&wente(&args));
    let b = stdout(&wente(&args));
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", a);
}

#[test]
fn warm_cache_reproduces_cold_run() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let args = ["report", "--surface", "8/5", "--m", "41", "--cache-dir", cache];
    let cold = stdout(&wente(&args));
    let files = std::fs::read_dir(dir.path()).unwrap().count();
    assert!(files >= 2, "expected coarse and doubled grids, found {files}");
    let warm = stdout(&wente(&args));
    assert_eq!(cold, warm);

    let uncached = json(&wente(&["report", "--surface", "8/5", "--m", "41"]));
    let cold: Value = serde_json::from_str(&cold).unwrap();
    assert_eq!(cold["results"], uncached["results"]);

    let listed = stdout(&wente(&["cache", "inspect", "--cache-dir", cache]));
    assert!(listed.contains("W_8/5"));
    let cleared = stdout(&wente(&["cache", "clear", "--cache-dir", cache]));
    assert!(cleared.contains(&format!("removed {files}")));
    assert!(is_empty(dir.path()));
}

fn is_empty(dir: &Path) -> bool {
    std::fs::read_dir(dir).unwrap().next().is_none()
}

#[test]
fn cache_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wente"))
        .args(["cache", "inspect", "--format", "json"])
        .env("WENTE_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"], serde_json::json!([]));
    assert_eq!(v["config"]["cache_dir"], dir.path().to_str().unwrap());
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["report", "--surface", "9/9"][..],
        &["report", "--surface", "11/10"],
        &["report", "--surface", "3/2", "--m", "0"],
        &["subspace", "--surface", "4/3", "--indices", ""],
        &["subspace", "--surface", "4/3", "--indices", "1,0"],
        &["subspace", "--surface", "all", "--indices", "1,2"],
        &["cache", "inspect"],
    ] {
        let out = wente(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn unresolved_truncation_fails_consistency() {
    let out = wente(&["report", "--surface", "3/2", "--m", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inconsistent"));
}

#[test]
fn both_methods_agree() {
    let v = json(&wente(&["report", "--surface", "4/3", "--m", "25", "--method", "both", "--quad-grid", "128"]));
    let o = &v["results"][0]["oracle"];
    assert_eq!(o["entries"], 325);
    assert!(o["max_discrepancy"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn printed_block_for_four_thirds() {
    let text = stdout(&wente(&["subspace", "--surface", "4/3", "--format", "text"]));
    assert!(text.contains("-2.29"));
    assert!(text.contains("-3.23"));
    assert!(text.contains("negative definite: true"));
    assert!(text.contains("index >= 9"));

    let v = json(&wente(&["subspace", "--surface", "4/3"]));
    let rec = &v["results"][0];
    assert!(rec["published_deviation"].as_f64().unwrap() <= 0.05);
    assert_eq!(rec["matrix"].as_array().unwrap().len(), 10);
}

#[test]
fn explicit_indices() {
    let v = json(&wente(&["subspace", "--surface", "3/2", "--indices", "1 2 3"]));
    let rec = &v["results"][0];
    assert_eq!(rec["indices"], serde_json::json!([1, 2, 3]));
    assert!(rec["published_deviation"].is_null());
}

#[test]
fn bounds_table_in_catalog_order() {
    let csv = stdout(&wente(&["table2", "--format", "csv"]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 20);
    assert!(lines[0].starts_with("surface,theta_degrees,x_period"));
    assert!(lines[1].starts_with("3/2,"));
    assert!(lines[19].starts_with("73/72,"));

    let v = json(&wente(&["table2", "--jobs", "2"]));
    for row in v["results"].as_array().unwrap() {
        assert_eq!(row["v_min"], 2.0);
        assert_eq!(row["courant_ok"], true);
        assert_eq!(row["sandwich_lower_ok"], true);
        assert_eq!(row["sandwich_upper_ok"], true);
    }
}

#[test]
fn text_output_uses_six_significant_digits() {
    let text = stdout(&wente(&["bounds", "--surface", "3/2", "--format", "text"]));
    assert!(text.contains("2.55561"), "{text}");
    assert!(text.contains("123.447"), "{text}");
    assert!(text.contains("213"));
}
