use std::fs;
use std::process::{Command, Output};

fn hardy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of a CSV output, split into fields.
fn rows(out: &Output) -> Vec<Vec<String>> {
    stdout(out)
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn field(row: &[String], i: usize) -> f64 {
    row[i].parse().unwrap()
}

#[test]
fn halfline_weight_table() {
    let out = hardy(&["hardy-weight", "--family", "halfline", "--range", "1:5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# hardy hardy-weight config-hash="));
    assert_eq!(lines.next().unwrap(), "vertex,w,w_closed_form,w_n2,harmonic");
    let rows = rows(&out);
    assert_eq!(rows.len(), 5);
    assert_eq!(field(&rows[0], 1), 2.0 - 2f64.sqrt());
    for row in &rows {
        let (w, closed) = (field(row, 1), field(row, 2));
        assert!((w - closed).abs() <= 1e-12 * closed);
    }
}

#[test]
fn empty_range_gives_empty_table() {
    let out = hardy(&["hardy-weight", "--family", "halfline", "--range", "5:4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn lattice_weight_near_quarter() {
    let out = hardy(&["hardy-weight", "--family", "lattice", "--dim", "3", "--points", "axis:10,20,30"]);
    assert_eq!(out.status.code(), Some(0));
    for row in rows(&out) {
        let k = field(&row, 1);
        assert!((field(&row, 3) - 0.25).abs() < 0.15 / k);
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("verify.csv");
    let args = ["verify", "--trials", "5", "--seed", "9"];
    let a = hardy(&args);
    let b = hardy(&args);
    assert_eq!(a.stdout, b.stdout);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let c = hardy(&with_out);
    assert_eq!(c.status.code(), Some(0));
    assert!(c.stdout.is_empty());
    assert_eq!(fs::read(&path).unwrap(), a.stdout);
    let other = hardy(&["verify", "--trials", "5", "--seed", "10"]);
    let hash = |o: &Output| stdout(o).lines().next().unwrap().to_string();
    assert_ne!(hash(&a), hash(&other));
}

#[test]
fn verify_suite_passes() {
    let out = hardy(&["verify", "--trials", "100", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&out);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| field(r, 5) <= 1e-10 && r[6] == "true"));
}

#[test]
fn impossible_tolerance_is_a_diagnostic_failure() {
    let out = hardy(&["verify", "--trials", "3", "--identity", "chain-rule", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn injected_asymmetry_is_an_input_error() {
    let out = hardy(&["verify", "--trials", "1", "--seed", "7", "--inject-asymmetry"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("asymmetric"));
}

#[test]
fn coarea_table_matches() {
    let out = hardy(&["verify", "--identity", "coarea", "--f", "inverse-t", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(0));
    for row in rows(&out) {
        let (lhs, rhs) = (field(&row, 2), field(&row, 3));
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }
}

#[test]
fn green_halfline_is_min() {
    let out = hardy(&["green", "--family", "halfline", "--pole", "5", "--dirichlet-at", "0", "--radius", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&out);
    assert_eq!(rows.len(), 40);
    for row in rows {
        let n: f64 = field(&row, 0);
        assert!((field(&row, 1) - n.min(5.0)).abs() < 1e-10 * 5.0);
        assert!(field(&row, 2) < 1e-10);
    }
}

#[test]
fn green_fourier_watson() {
    let out = hardy(&["green", "--family", "lattice", "--dim", "3", "--method", "fourier", "--point", "0,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&out);
    assert!((field(&rows[0], 1) - 1.516_386_059_151_978).abs() < 1e-8);
    assert_eq!(rows[0][4], "random-walk");
}

#[test]
fn recurrent_lattice_rejected() {
    let out = hardy(&["green", "--family", "lattice", "--dim", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported family"));
}

#[test]
fn sweep_halfline_balls() {
    let out = hardy(&["sweep", "--family", "halfline", "--balls", "100,1000,10000", "--annulus-outer", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let balls: Vec<f64> = rows(&out).iter().filter(|r| r[0] == "balls").map(|r| field(r, 5)).collect();
    assert_eq!(balls.len(), 3);
    assert!(balls.iter().all(|&l| l >= 1.0));
    assert!(balls.windows(2).all(|p| p[1] < p[0]));
}

#[test]
fn sweep_report_json() {
    let out = hardy(&[
        "sweep",
        "--family",
        "halfline",
        "--balls",
        "100,1000",
        "--annulus-outer",
        "100",
        "--null-n",
        "4,16",
        "--divergence-radii",
        "100,1000",
        "--weight-scale",
        "2",
        "--format",
        "json",
    ]);
    // doubling the weight breaks the inequality
    assert_eq!(out.status.code(), Some(2));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["command"], "sweep");
    assert_eq!(doc["report"]["verdict"]["hardy_inequality"], false);
    assert_eq!(doc["report"]["balls"]["classification"], "supercritical");
}

#[test]
fn sweep_with_weight_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    let weights = dir.path().join("w.csv");
    fs::write(
        &graph,
        r#"{"vertices":[0,1,2,3],"edges":[[0,1,1.0],[1,2,1.0],[2,3,1.0]],"potential":{"0":1.0,"3":1.0}}"#,
    )
    .unwrap();
    fs::write(&weights, "vertex,w\n0,0.1\n1,0.1\n2,0.1\n3,0.1\n").unwrap();
    let out = hardy(&[
        "sweep",
        "--family",
        "custom-finite",
        "--graph",
        graph.to_str().unwrap(),
        "--weight-file",
        weights.to_str().unwrap(),
        "--balls",
        "3",
        "--annulus-outer",
        "3",
        "--annulus-inner",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&out);
    // path of 4 with unit end potentials: smallest eigenvalue 2 - 2cos(π/5)
    let lambda = field(&rows[0], 5);
    let exact = (2.0 - 2.0 * (std::f64::consts::PI / 5.0).cos()) / 0.1;
    assert!((lambda - exact).abs() < 1e-8 * exact);
}

#[test]
fn coarea_check_on_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.json");
    let function = dir.path().join("u.csv");
    fs::write(&graph, r#"{"edges":[[0,1,1.0],[1,2,2.0],[0,2,0.5]]}"#).unwrap();
    fs::write(&function, "vertex,value\n0,1.0\n1,2.5\n2,4.0\n").unwrap();
    let out = hardy(&[
        "coarea-check",
        "--graph",
        graph.to_str().unwrap(),
        "--function",
        function.to_str().unwrap(),
        "--f",
        "constant",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let row = &rows(&out)[0];
    // Σ b (Δu)²: 1·1.5² + 2·1.5² + 0.5·3²
    assert!((field(row, 3) - 11.25).abs() < 1e-12);
    assert_eq!(row[8], "true");

    let flux = hardy(&["coarea-check", "--graph", graph.to_str().unwrap(), "--function", function.to_str().unwrap(), "--flux"]);
    let g: Vec<f64> = rows(&flux).iter().map(|r| field(r, 2)).collect();
    // (1, 2.5]: edges 0-1 and 0-2; (2.5, 4]: edges 1-2 and 0-2
    assert_eq!(g, vec![1.5 + 1.5, 3.0 + 1.5]);
}

#[test]
fn bad_arguments_are_input_errors() {
    assert_eq!(hardy(&["--bogus"]).status.code(), Some(3));
    assert_eq!(hardy(&["hardy-weight", "--range", "x"]).status.code(), Some(3));
    assert_eq!(hardy(&["--help"]).status.code(), Some(0));
}
