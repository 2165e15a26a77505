use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_eulerwave");

fn scenario(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("EULERWAVE_THREADS")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_owned();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn different_densities_at_rest_are_not_wave_connected() {
    let out = run(&["wavecone", "--state", "1,0,0", "--state", "4,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["connected"], false);
    assert_eq!(v["det"], -675.0);
    assert_eq!(v["det_factored"], -675.0);
}

#[test]
fn equal_densities_are_wave_connected() {
    let v = json(&run(&["wavecone", "--state", "2,1,1", "--state", "2,0,3"]));
    assert_eq!(v["connected"], true);
    assert!(v["direction"].is_array());
}

#[test]
fn malformed_vector_names_the_component() {
    let out = run(&["wavecone", "--vector", "1,2,x,0,0,0,0,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("component 3"), "{}", stderr(&out));

    let out = run(&["wavecone", "--vector", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn negative_density_is_an_input_error() {
    let out = run(&["wavecone", "--state", "-1,0,0", "--state", "1,0,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn witness_fans_pass_their_checks() {
    let out = run(&["subsolution", "baseline", "--c1", "6", "--check"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = run(&[
        "subsolution",
        "perturb",
        "--eta=-0.001",
        "--c1",
        "5.8",
        "--check",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(json(&out)["conditions"]["overall"], true);
}

#[test]
fn fan_outside_its_window_fails_the_check() {
    let out = run(&["subsolution", "baseline", "--c1", "9", "--check"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn perturbation_outside_the_range_is_rejected() {
    let out = run(&["subsolution", "perturb", "--eta=0.5", "--c1", "6"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn baseline_interval_endpoints() {
    let v = json(&run(&["subsolution", "interval", "--eta", "0"]));
    let iv = &v["interval"]["Interval"];
    assert!((iv["lo"]["value"].as_f64().unwrap() - 9049.0 / 1680.0).abs() <= 1e-10);
    assert_eq!(iv["lo"]["closed"], false);
    assert!((iv["hi"]["value"].as_f64().unwrap() - 11497.0 / 1680.0).abs() <= 1e-10);
    assert_eq!(iv["hi"]["closed"], true);
}

#[test]
fn empty_interval_exits_one() {
    let out = run(&["subsolution", "interval", "--eta=-0.6"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pair_search_finds_the_witness() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pairs.csv");
    let out = run(&[
        "pair-search",
        "--etas=-0.001",
        "--c1s",
        "5.9,6,6.1",
        "--c1-tildes",
        "5.7,5.8",
        "-o",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = csv_rows(&csv);
    assert_eq!(
        header,
        "eta,C1,C1_tilde,separation_margin,wedge_lo,wedge_hi"
    );
    assert!(!rows.is_empty());
    assert!(rows
        .iter()
        .any(|r| r[0] == -0.001 && r[1] == 6.0 && r[2] == 5.8));
    assert!(rows.iter().all(|r| r[3] > 0.0));
    assert_eq!(json(&out)["pairs"], rows.len());
}

#[test]
fn pair_search_with_an_empty_grid_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(&grid, r#"{ "etas": [], "c1s": [6.0] }"#).unwrap();
    let csv = dir.path().join("pairs.csv");
    let out = run(&[
        "pair-search",
        "--grid",
        grid.to_str().unwrap(),
        "-o",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (_, rows) = csv_rows(&csv);
    assert!(rows.is_empty());
}

#[test]
fn pair_search_floor_above_every_margin_gives_no_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pairs.csv");
    let out = run(&[
        "pair-search",
        "--etas=-0.001",
        "--c1s",
        "6",
        "--c1-tildes",
        "5.8",
        "--floor",
        "1",
        "-o",
    ]
    .into_iter()
    .chain([csv.to_str().unwrap()])
    .collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(csv_rows(&csv).1.is_empty());
}

#[test]
fn unwritable_output_is_an_input_error() {
    let out = run(&[
        "pair-search",
        "--etas=-0.001",
        "--c1s",
        "6",
        "-o",
        "/nonexistent/dir/pairs.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bundled_scenarios_audit_cleanly() {
    let v = json(&run(&["audit", &scenario("paper_witness.json")]));
    assert_eq!(v["pass"], true);
    let text = v.to_string();
    assert!(text.contains("NOT_GENERABLE"));

    let v = json(&run(&["audit", &scenario("equal_density.json")]));
    assert_eq!(v["pass"], true);
    let text = v.to_string();
    assert!(text.contains("INCONCLUSIVE"));
    assert!(text.contains("OSCILLATION_OBSERVED"));
}

#[test]
fn audit_output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "audit",
        &scenario("paper_witness.json"),
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(saved, json(&out));
}

#[test]
fn schema_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{ "version": "1.0.0", "entries": [ { "type": "ym", "id": "m", "lambda": 0.5, "atom_a": "x", "atom_b": "y" } ] }"#,
    )
    .unwrap();
    let out = run(&["audit", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("'x'"), "{}", stderr(&out));

    let out = run(&["audit", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rigidity_verdicts_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let hist = dir.path().join("hist.csv");
    let out = run(&[
        "rigidity",
        "--state",
        "1,0,0",
        "--state",
        "4,0,0",
        "--grid",
        "32",
        "--n-list",
        "1,2,4",
        "-o",
        csv.to_str().unwrap(),
        "--histogram",
        hist.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(json(&out)["verdict"], "RIGIDITY_CONSISTENT");
    let (header, rows) = csv_rows(&csv);
    assert_eq!(header, "n,afree_residual,d_n,atom_mass_a,atom_mass_b");
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        [1.0, 2.0, 4.0]
    );
    for r in &rows {
        assert!(r[2] > 0.05);
        assert!((r[3] + r[4] - 1.0).abs() <= 1e-12);
    }
    let (header, rows) = csv_rows(&hist);
    assert_eq!(header, "n,bin_center,mass");
    assert!(!rows.is_empty());

    let v = json(&run(&[
        "rigidity", "--state", "2,1,0", "--state", "2,0,0", "--grid", "32", "--n-list", "1,2",
    ]));
    assert_eq!(v["verdict"], "OSCILLATION_OBSERVED");
}

#[test]
fn grid_must_be_a_power_of_two() {
    let out = run(&[
        "rigidity", "--state", "1,0,0", "--state", "4,0,0", "--grid", "100",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_an_input_error() {
    let out = Command::new(BIN)
        .args(["subsolution", "interval", "--eta", "0"])
        .env("EULERWAVE_THREADS", "abc")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("EULERWAVE_THREADS"));
}
