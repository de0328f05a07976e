use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treerecon"))
        .args(args)
        .env_remove("TREERECON_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn csv_rows(out: &Output) -> Vec<Vec<f64>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert!(lines.next().unwrap().starts_with("depth,tv,mean_gap,var_a"));
    lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect()
}

#[test]
fn bounds_reports_kelly_and_kesten_stigum() {
    let v = json(&["bounds", "--hardcore", "--k", "2"]);
    assert_eq!(v["config"]["command"], "bounds");
    let kelly = v["result"]["hardcore"]["kelly"].as_f64().unwrap();
    assert!((kelly - 4.0).abs() < 1e-12);
    let v = json(&["bounds", "--symmetric", "--k", "2"]);
    let ks = v["result"]["symmetric"]["ks_eps"].as_f64().unwrap();
    assert!((ks - (1.0 - 0.5f64.sqrt()) / 2.0).abs() < 1e-15);
}

#[test]
fn invalid_input_exits_2() {
    assert_eq!(run(&["bounds", "--hardcore", "--k", "1"]).status.code(), Some(2));
    assert_eq!(run(&["evolve", "--channel", "0.7", "0.2", "0.4", "0.4"]).status.code(), Some(2));
    assert_eq!(run(&["evolve", "--symmetric", "0.2", "--hardcore-w", "1"]).status.code(), Some(2));
    assert_eq!(run(&["couple", "--symmetric", "0.2", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn uninformative_channel_gives_a_flat_zero_curve() {
    let out = run(&["evolve", "--symmetric", "0.5", "--depth", "5"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert_eq!(&r[1..], &[0.0, 0.0, 0.0]);
    }
}

#[test]
fn hardcore_curve_decreases_at_unit_activity() {
    let out = run(&["evolve", "--hardcore-lambda", "1", "--bins", "1000", "--depth", "8"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert!(rows[0][2].is_infinite());
    for w in rows.windows(2) {
        assert!(w[1][1] < w[0][1], "{:?} then {:?}", w[0], w[1]);
    }
}

#[test]
fn population_curve_carries_standard_errors() {
    let out = run(&["evolve", "--symmetric", "0.2", "--engine", "population", "--pop-size", "2000", "--depth", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",tv_se,mean_gap_se,var_a_se"));
}

#[test]
fn reruns_are_byte_identical() {
    for args in [
        &["evolve", "--channel", "0.8", "0.3", "--engine", "population", "--pop-size", "3000", "--depth", "5", "--seed", "11"][..],
        &["hardcore-check", "--hardcore", "--samples", "1000", "--seed", "2"][..],
    ] {
        assert_eq!(run(args).stdout, run(args).stdout);
    }
    let a = run(&["evolve", "--symmetric", "0.2", "--engine", "population", "--pop-size", "3000", "--seed", "1", "--depth", "4"]);
    let b = run(&["evolve", "--symmetric", "0.2", "--engine", "population", "--pop-size", "3000", "--seed", "2", "--depth", "4"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn output_goes_to_the_requested_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/curve.csv");
    let out = run(&["evolve", "--symmetric", "0.3", "--depth", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().contains("\"format\":\"csv\""));

    let out = Command::new(env!("CARGO_BIN_EXE_treerecon"))
        .args(["couple", "--symmetric", "0.3"])
        .env("TREERECON_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("couple.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["crossing_violations"], 0);
}

#[test]
fn agreeing_bracket_exits_4() {
    let out = run(&["threshold", "--symmetric", "--engine", "exact", "--depth", "12", "--lo", "0.3", "--hi", "0.45", "--tol", "0.01"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn atom_explosion_exits_3() {
    let out = run(&["evolve", "--symmetric", "0.2", "--k", "4", "--depth", "12"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn coupling_reports_ordered_pairs() {
    let v = json(&["couple", "--hardcore-w", "1", "--depth", "3"]);
    let r = &v["result"];
    assert!(r["marginal_error"].as_f64().unwrap() <= 1e-12);
    assert_eq!(r["crossing_violations"], 0);
    let gap = r["expected_gap"].as_f64().unwrap();
    assert!(gap > 0.0);
}

#[test]
fn hardcore_check_passes() {
    let v = json(&["hardcore-check", "--hardcore-w", "0.5", "--samples", "2000"]);
    assert_eq!(v["result"]["pass"], true);
    assert_eq!(v["result"]["gibbs"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_with_equal_rows_reports_zero_gap() {
    let v = json(&["verify", "--channel", "0.7", "0.7", "--samples", "500"]);
    let checks = v["result"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["pass"] == true), "{checks:?}");
    let gap = checks.iter().find(|c| c["name"] == "mean_gap").unwrap();
    assert_eq!(gap["residual"].as_f64().unwrap(), 0.0);
}
