use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lorentzcg"))
        .args(args)
        .env_remove("LORENTZCG_TOL")
        .env_remove("LORENTZCG_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classify_complementary() {
    let out = run(&["classify", "--lambda-x2", "0", "--rho", "0.5,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["seed"], 1);
    assert_eq!(v["classification"]["class"], "Complementary");
    assert_eq!(v["unitary"], true);
}

#[test]
fn classify_finite() {
    let out = run(&["classify", "--lambda-x2", "1", "--rho", "-1.5,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["classification"]["class"], "FiniteDimensional");
    assert_eq!(v["classification"]["j_max_x2"], 1);
    assert_eq!(v["finite_dimensional"], true);
}

#[test]
fn missing_flag_is_usage_error() {
    let out = run(&["classify", "--rho", "0,1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["decompose", "--lambda-x2", "0", "--rho", "0,2", "--gamma-x2", "1", "--A", "2", "--jmax-x2", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_cut_is_usage_error() {
    let out = run(&["js", "--lambda-x2", "0", "--rho", "0,2", "--A", "1", "--jcut-x2", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "Usage");
}

#[test]
fn decompose_is_deterministic() {
    let args = ["decompose", "--lambda-x2", "1", "--rho", "0.3,1.7", "--gamma-x2", "2", "--A", "-1", "--jmax-x2", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["schema"], 1);
    let blocks = v["blocks"].as_array().unwrap();
    assert!(!blocks.is_empty());
    for block in blocks {
        for pair in block["pairs"].as_array().unwrap() {
            assert!(pair["residual"].as_f64().unwrap() < 1e-9);
            assert_eq!(pair["coeffs"].as_array().unwrap().len(), block["omega_x2"].as_array().unwrap().len());
        }
    }
}

#[test]
fn decompose_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let out = run(&[
        "decompose", "--lambda-x2", "0", "--rho", "0,2", "--gamma-x2", "1", "--A", "1", "--jmax-x2", "3", "--csv", "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[0], "J_x2");
    assert!(header.contains(&"B_im".to_string()));
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert!(rows.len() >= 8);
    for row in &rows {
        assert_eq!(row.len(), header.len());
    }
}

#[test]
fn js_both_signs() {
    let out = run(&["js", "--lambda-x2", "0", "--rho", "0,2", "--A", "both", "--jcut-x2", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0]["A"], 1);
    assert_eq!(results[1]["A"], -1);
    assert_eq!(v["passed"], true);
}

#[test]
fn js_degenerate_normalisation_fails() {
    let out = run(&["js", "--lambda-x2", "1", "--rho", "0.5,0", "--A", "-1", "--jcut-x2", "7"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["error"]["kind"], "DegenerateNormalisation");
}

#[test]
fn we_check_passes() {
    let out = run(&["we-check", "--lambda-x2", "1", "--rho", "0,1.5", "--gamma-x2", "2", "--A", "1", "--jcut-x2", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pairs"].as_array().unwrap().len(), 3);
    assert_eq!(v["passed"], true);
}

#[test]
fn verify_subset_and_tolerance() {
    let out = run(&["verify", "--only", "9", "10", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["groups"].as_array().unwrap().len(), 2);

    let again = run(&["verify", "--only", "9", "10", "--seed", "7", "--threads", "1"]);
    assert_eq!(out.stdout, again.stdout);

    let strict = run(&["verify", "--only", "10", "--tolerance", "1e-300"]);
    assert_eq!(strict.status.code(), Some(1));
    assert_eq!(json(&strict)["passed"], false);

    let unknown = run(&["verify", "--only", "nope"]);
    assert_eq!(unknown.status.code(), Some(2));
}
