use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn leontief(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leontief"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn example1_zero(k: f64) -> f64 {
    (1.0 / (k + 2.0)).powf(1.0 / (k + 1.0))
}

#[test]
fn solve_example1_writes_closed_form_price_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = leontief(dir.path(), &["solve", "--family", "example1", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/psi.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,psi"));
    let mut n = 0;
    for line in lines {
        let (k, psi) = line.split_once(',').unwrap();
        let (k, psi): (f64, f64) = (k.parse().unwrap(), psi.parse().unwrap());
        assert!((psi - example1_zero(k)).abs() < 1e-8, "k = {k}: {psi}");
        n += 1;
    }
    assert!(n > 50);
    let mech = read_json(&dir.path().join("o/mechanism.json"));
    assert_eq!(mech["kind"], "ratio_dependent");
    let sol = read_json(&dir.path().join("o/solution.json"));
    assert_eq!(sol["path"], "ratio_dependent");
    assert!(dir.path().join("o/run.json").exists());
    let grid = fs::read_to_string(dir.path().join("o/mechanism_grid.csv")).unwrap();
    assert!(grid.starts_with("v,k,f1,f2,p\n"));
    assert_eq!(grid.lines().count(), 1 + 50 * 50);
}

#[test]
fn conditions_example2_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = leontief(dir.path(), &["conditions", "--family", "example2", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("A: holds"), "{stdout}");
    assert!(stdout.contains("B: fails"), "{stdout}");
    assert!(stdout.contains("B': holds"), "{stdout}");
    let c = read_json(&dir.path().join("o/conditions.json"));
    assert_eq!(c["a"]["holds"], true);
    assert_eq!(c["b"]["holds"], false);
    assert_eq!(c["b_prime"]["holds"], true);
    let zero = fs::read_to_string(dir.path().join("o/zero_curve.csv")).unwrap();
    assert!(zero.starts_with("k,phi_inv_zero\n"));
}

#[test]
fn solve_example2_posts_the_closed_form_price() {
    let dir = tempfile::tempdir().unwrap();
    let out = leontief(dir.path(), &["solve", "--family", "example2", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let mech = read_json(&dir.path().join("o/mechanism.json"));
    assert_eq!(mech["kind"], "posted_price");
    let p = mech["price"].as_f64().unwrap();
    assert!((p - (13f64.sqrt() - 2.0) / 3.0).abs() < 1e-8, "{p}");
}

#[test]
fn verify_decreasing_threshold_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("dec.json"),
        r#"{"kind":"ratio_dependent","psi":{"points":[[0.1,0.8],[1,0.3]]}}"#,
    )
    .unwrap();
    let out = leontief(dir.path(), &["verify", "--mechanism", "dec.json", "--grid", "20", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    let v = read_json(&dir.path().join("o/verify.json"));
    assert_eq!(v["pass"], false);
    let ic = &v["direct"]["checks"]["pairwise_ic"];
    assert!(ic["max_violation"].as_f64().unwrap() > 0.1);
    let (k, k2) = (ic["witness"]["k"].as_f64().unwrap(), ic["witness2"]["k"].as_f64().unwrap());
    assert!(k2 > k);
    let csv = fs::read_to_string(dir.path().join("o/verify.csv")).unwrap();
    assert!(csv.starts_with("family,max_violation,witness_v,witness_k,witness_v2,witness_k2\n"));
}

#[test]
fn verify_solved_mechanism_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(leontief(dir.path(), &["solve", "--family", "example1", "--out", "o"]).status.code(), Some(0));
    let out = leontief(
        dir.path(),
        &["verify", "--family", "example1", "--mechanism", "o/mechanism.json", "--grid", "25", "--out", "v"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn revenue_functionals_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = leontief(dir.path(), &["revenue", "--family", "example1", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let r = read_json(&dir.path().join("o/revenue.json"));
    assert!(r["difference"].as_f64().unwrap().abs() < 1e-7);
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    for (body, key) in [
        (r#"{"grid": 10, "bogus": 1}"#, "`bogus`"),
        (r#"{"grid": "x"}"#, "`grid`"),
        (r#"{"oracle": {"k_nodes": -1}}"#, "`oracle.k_nodes`"),
        (r#"{"k_floor": 0.9}"#, "`k_floor`"),
    ] {
        fs::write(dir.path().join("c.json"), body).unwrap();
        let out = leontief(dir.path(), &["solve", "--config", "c.json"]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(key), "{body}: {err}");
    }
    let out = leontief(dir.path(), &["solve", "--grid", "many"]);
    assert_eq!(out.status.code(), Some(2));
    let out = leontief(dir.path(), &["verify", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("`mechanism`"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        for cmd in ["conditions", "solve", "revenue"] {
            let o = leontief(dir.path(), &[cmd, "--family", "example2", "--out", out]);
            assert_eq!(o.status.code(), Some(0));
        }
    }
    for name in ["conditions.json", "zero_curve.csv", "mechanism.json", "solution.json", "psi.csv", "mechanism_grid.csv", "revenue.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let run_a = read_json(&dir.path().join("a/run.json"));
    assert_eq!(run_a["out"], "a");
}
