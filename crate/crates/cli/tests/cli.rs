use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use obsent_core::entropy::coarse_grained_state;
use obsent_core::hilbert::io::{load_matrix, load_state, write_coarse_graining, write_matrix};
use obsent_core::hilbert::{
    coarse_graining_from_observable, pauli, CMatrix, CoarseGraining, Observable, C64,
};
use obsent_core::thermo::{build_model, EntropyId, EntropySuite, QuenchConfig, TimeGrid};
use serde_json::Value;
use tempfile::TempDir;

fn obsent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obsent"))
        .args(args)
        .env_remove("OBSENT_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_stdout(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn pauli_cg(dir: &TempDir, which: char) -> PathBuf {
    let cg =
        coarse_graining_from_observable(&Observable::new(pauli(which)).unwrap(), 1e-8).unwrap();
    let path = dir.path().join(format!("{which}.json"));
    write_coarse_graining(&path, &cg).unwrap();
    path
}

const KET0: &str = r#"{"dim": 2, "re": [[1, 0], [0, 0]]}"#;

#[test]
fn z_then_x_on_ket_zero() {
    let dir = TempDir::new().unwrap();
    let state = write(&dir, "rho.json", KET0);
    let (z, x) = (pauli_cg(&dir, 'z'), pauli_cg(&dir, 'x'));
    let zx = json_stdout(&obsent(&[
        "entropy",
        path_str(&state),
        path_str(&z),
        path_str(&x),
    ]));
    assert!(zx["entropy"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(zx["records"].as_array().unwrap().len(), 4);
    assert!(zx.get("shannon_part").is_none());
    let xz = json_stdout(&obsent(&[
        "entropy",
        path_str(&state),
        path_str(&x),
        path_str(&z),
    ]));
    assert!((xz["entropy"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
    let bits = json_stdout(&obsent(&[
        "entropy",
        "--bits",
        path_str(&state),
        path_str(&x),
        path_str(&z),
    ]));
    assert!((bits["entropy"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(bits["units"], "bits");
}

#[test]
fn maximally_mixed_gives_ln_dim() {
    let dir = TempDir::new().unwrap();
    let rho = CMatrix::identity(4, 4).unscale(4.0);
    let state = dir.path().join("mixed.json");
    write_matrix(&state, &rho).unwrap();
    let cg = dir.path().join("cg.json");
    let u = obsent_core::random::haar_unitary(4, &mut obsent_core::random::seeded(3));
    write_coarse_graining(
        &cg,
        &CoarseGraining::from_column_groups(&u, &[vec![0, 2], vec![1], vec![3]]).unwrap(),
    )
    .unwrap();
    let report = json_stdout(&obsent(&["entropy", path_str(&state), path_str(&cg)]));
    let s = report["entropy"].as_f64().unwrap();
    assert!((s - 4f64.ln()).abs() < 1e-12);
    let parts =
        report["shannon_part"].as_f64().unwrap() + report["mean_boltzmann_part"].as_f64().unwrap();
    assert!((parts - s).abs() < 1e-12);
    assert!(report["kl"].as_f64().unwrap().abs() < 1e-12);
    assert!((report["S_vN"].as_f64().unwrap() - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn malformed_json_exits_2() {
    let dir = TempDir::new().unwrap();
    let state = write(&dir, "bad.json", "{ not json");
    let z = pauli_cg(&dir, 'z');
    let out = obsent(&["entropy", path_str(&state), path_str(&z)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));
}

#[test]
fn invalid_state_exits_2() {
    let dir = TempDir::new().unwrap();
    let state = write(
        &dir,
        "trace.json",
        r#"{"dim": 2, "re": [[0.5, 0], [0, 0.4]]}"#,
    );
    let z = pauli_cg(&dir, 'z');
    let out = obsent(&["entropy", path_str(&state), path_str(&z)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dimension_mismatch_exits_3() {
    let dir = TempDir::new().unwrap();
    let state = write(&dir, "rho.json", KET0);
    let cg = dir.path().join("cg3.json");
    write_coarse_graining(&cg, &CoarseGraining::computational(3)).unwrap();
    let out = obsent(&["entropy", path_str(&state), path_str(&cg)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn coarse_grained_state_reloads_bit_identically() {
    let dir = TempDir::new().unwrap();
    let rho = obsent_core::random::random_density(3, 3, &mut obsent_core::random::seeded(11));
    let state = dir.path().join("rho.json");
    write_matrix(&state, &rho.density_matrix()).unwrap();
    let cg = CoarseGraining::from_column_groups(&CMatrix::identity(3, 3), &[vec![0, 1], vec![2]])
        .unwrap();
    let cg_path = dir.path().join("cg.json");
    write_coarse_graining(&cg_path, &cg).unwrap();
    let out_path = dir.path().join("cg_state.json");
    let out = obsent(&[
        "entropy",
        path_str(&state),
        path_str(&cg_path),
        "--coarse-grained-state",
        path_str(&out_path),
    ]);
    assert!(out.status.success());
    let expected = coarse_grained_state(&load_state(&state).unwrap(), &cg)
        .unwrap()
        .density_matrix();
    let written = load_matrix(&out_path).unwrap();
    for (a, b) in expected.iter().zip(written.iter()) {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
}

#[test]
fn validate_reports_each_check() {
    let dir = TempDir::new().unwrap();
    let good = write(
        &dir,
        "good.json",
        r#"{"dim": 2, "re": [[0.5, 0], [0, 0.5]]}"#,
    );
    let out = obsent(&["validate", path_str(&good)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.matches("PASS").count(), 3);

    let short = write(
        &dir,
        "short.json",
        r#"{"dim": 2, "re": [[0.5, 0], [0, 0.4]]}"#,
    );
    let out = obsent(&["validate", "--json", path_str(&short)]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    let trace = checks.iter().find(|c| c["name"] == "unit trace").unwrap();
    assert_eq!(trace["passed"], false);
    assert!((trace["residual"].as_f64().unwrap() - 0.1).abs() < 1e-12);

    let overlapping = write(
        &dir,
        "overlap.json",
        r#"{"dim": 2, "elements": [
            {"dim": 2, "re": [[1, 0], [0, 0]]},
            {"dim": 2, "re": [[0.5, 0.5], [0.5, 0.5]]}
        ]}"#,
    );
    let out = obsent(&["validate", path_str(&overlapping)]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text
        .lines()
        .any(|l| l.contains("FAIL") && l.contains("mutual orthogonality")));

    let projector = write(
        &dir,
        "p.json",
        r#"{"dim": 2, "re": [[0.5, 0.5], [0.5, 0.5]]}"#,
    );
    assert_eq!(
        obsent(&["validate", "--as", "projector", path_str(&projector)])
            .status
            .code(),
        Some(0)
    );

    let missing = dir.path().join("missing.json");
    assert_eq!(
        obsent(&["validate", path_str(&missing)]).status.code(),
        Some(2)
    );
}

fn small_scenario(dir: &TempDir, name: &str, times: TimeGrid) -> PathBuf {
    let mut config = QuenchConfig::reference(6);
    config.times = times;
    let path = dir.path().join(name);
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn csv_rows(path: &Path) -> Vec<(f64, String, f64)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,entropy_id,value"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].to_string(),
                f[2].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn simulate_writes_the_series_contract() {
    let dir = TempDir::new().unwrap();
    let scenario = small_scenario(
        &dir,
        "quench.json",
        TimeGrid::Linspace {
            start: 0.0,
            stop: 20.0,
            steps: 10,
        },
    );
    let out_dir = dir.path().join("out");
    let out = obsent(&["simulate", path_str(&scenario), "--out", path_str(&out_dir)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("equilibrium (1c)"));
    assert!(summary.contains("gap 1c - 2c"));

    let rows = csv_rows(&out_dir.join("quench.csv"));
    assert_eq!(rows.len(), 11 * EntropyId::ALL.len());
    let s1c: Vec<f64> = rows.iter().filter(|r| r.1 == "1c").map(|r| r.2).collect();
    assert_eq!(s1c.len(), 11);
    assert!(s1c.iter().all(|v| (v - s1c[0]).abs() <= 1e-8));

    let meta: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("quench.json")).unwrap()).unwrap();
    assert_eq!(meta["dim"], 20);
    assert!((meta["ln_dim"].as_f64().unwrap() - 20f64.ln()).abs() < 1e-12);
    assert!(meta["s_vn_initial"].as_f64().unwrap().abs() < 1e-12);
    assert!(meta["boundary_remainder_norm"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_is_deterministic_and_honors_the_env_directory() {
    let dir = TempDir::new().unwrap();
    let scenario = small_scenario(&dir, "det.json", TimeGrid::List(vec![0.0, 1.5, 7.0]));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(
        obsent(&["simulate", path_str(&scenario), "--out", path_str(&a)])
            .status
            .success()
    );
    let via_env = Command::new(env!("CARGO_BIN_EXE_obsent"))
        .args(["simulate", path_str(&scenario)])
        .env("OBSENT_OUTPUT_DIR", &b)
        .output()
        .unwrap();
    assert!(via_env.status.success());
    assert_eq!(
        fs::read(a.join("det.csv")).unwrap(),
        fs::read(b.join("det.csv")).unwrap()
    );
}

#[test]
fn single_time_snapshot_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let scenario = small_scenario(&dir, "snap.json", TimeGrid::List(vec![0.0]));
    let out_dir = dir.path().join("out");
    let out = obsent(&[
        "simulate",
        path_str(&scenario),
        "--out",
        path_str(&out_dir),
        "--delta-e",
        "0.3",
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&out_dir.join("snap.csv"));
    assert_eq!(rows.len(), EntropyId::ALL.len());

    let config = QuenchConfig::reference(6);
    let model = build_model(&config.model).unwrap();
    let initial = model.occupation_state("111000").unwrap();
    let suite = EntropySuite::new(&model, &EntropyId::ALL, Some(0.3), None).unwrap();
    for (id, value) in suite.evaluate(&initial).unwrap() {
        let row = rows.iter().find(|r| r.1 == id.tag()).unwrap();
        assert_eq!(row.0, 0.0);
        assert!((row.2 - value).abs() <= 1e-12, "{id}");
    }
}

#[test]
fn oversized_lattice_exits_4() {
    let dir = TempDir::new().unwrap();
    let mut config = QuenchConfig::reference(20);
    config.times = TimeGrid::List(vec![0.0]);
    let path = dir.path().join("big.json");
    fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
    assert_eq!(
        obsent(&["simulate", path_str(&path), "--out", path_str(dir.path())])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(
        obsent(&["validate", path_str(&path)]).status.code(),
        Some(4)
    );
}

#[test]
fn scenario_validation_passes_for_the_reference_model() {
    let dir = TempDir::new().unwrap();
    let scenario = small_scenario(&dir, "ok.json", TimeGrid::List(vec![0.0]));
    let out = obsent(&["validate", path_str(&scenario)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn qce_of_a_bell_state() {
    let dir = TempDir::new().unwrap();
    let h = 0.5;
    let mut rho = CMatrix::zeros(4, 4);
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        rho[(i, j)] = C64::new(h, 0.0);
    }
    let state = dir.path().join("bell.json");
    write_matrix(&state, &rho).unwrap();
    let bases = dir.path().join("bases");
    let report = json_stdout(&obsent(&[
        "qce",
        path_str(&state),
        "--dims",
        "2,2",
        "--restarts",
        "4",
        "--seed",
        "5",
        "--write-measurement",
        path_str(&bases),
    ]));
    assert!((report["value"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-3);
    assert_eq!(report["restarts"].as_array().unwrap().len(), 4);
    for k in 0..2 {
        let file = bases.join(format!("party_{k}.json"));
        assert_eq!(
            obsent(&["validate", path_str(&file)]).status.code(),
            Some(0)
        );
    }
    let mismatch = obsent(&["qce", path_str(&state), "--dims", "2,3"]);
    assert_eq!(mismatch.status.code(), Some(3));
}

#[test]
fn classical_entropy_of_a_two_cell_partition() {
    let dir = TempDir::new().unwrap();
    let space = write(
        &dir,
        "space.json",
        r#"{"points": [0, 1, 2, 3], "weights": [1, 1, 2, 2], "density": [0.25, 0.25, 0.125, 0.125]}"#,
    );
    let halves = write(
        &dir,
        "halves.json",
        r#"{"cells": [[0, 1], [2, 3]], "labels": ["left", "right"]}"#,
    );
    let report = json_stdout(&obsent(&["classical", path_str(&space), path_str(&halves)]));
    // p = (1/2, 1/2), V = (2, 4)
    let expected = -(0.5 * (0.25f64).ln() + 0.5 * (0.125f64).ln());
    assert!((report["entropy"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert!((report["ln_total_measure"].as_f64().unwrap() - 6f64.ln()).abs() < 1e-12);
    assert_eq!(
        obsent(&["validate", path_str(&space)]).status.code(),
        Some(0)
    );
    assert_eq!(
        obsent(&["validate", path_str(&halves)]).status.code(),
        Some(0)
    );
    let bad = write(
        &dir,
        "bad.json",
        r#"{"points": [0, 1], "density": [0.5, 0.6]}"#,
    );
    assert_eq!(obsent(&["validate", path_str(&bad)]).status.code(), Some(1));
    assert_eq!(
        obsent(&["classical", path_str(&bad)]).status.code(),
        Some(2)
    );
}
