mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robust-sidelobe"))
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
        .display()
        .to_string()
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn pattern_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

fn control_nonuniform(dir: &Path) -> Output {
    exec(&[
        "control",
        "--geometry",
        &config("nonuniform_12.json"),
        "--uncertainty",
        &config("eps_0.16.json"),
        "--theta0",
        "-30",
        "--theta-k",
        "40",
        "--vd-db",
        "-25",
        "--out",
        &out_arg(dir),
    ])
}

#[test]
fn control_writes_nonuniform_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = control_nonuniform(dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert!((s["rho_db"].as_f64().unwrap() + 42.7746).abs() <= 0.01);
    assert!((s["beta_abs"].as_f64().unwrap() - 0.077).abs() <= 0.001);
    assert!((s["v_u_theta_k_db"].as_f64().unwrap() + 25.0).abs() <= 1e-6);
    assert_eq!(s["feasible"], Value::Bool(true));
    let w: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("weights.json")).unwrap()).unwrap();
    assert_eq!(w["weights"].as_array().unwrap().len(), 12);
    assert_eq!(w["magnitude"].as_array().unwrap().len(), 12);
    let header = fs::read_to_string(dir.path().join("pattern.csv")).unwrap();
    assert!(header.starts_with("theta_deg,v_a_db,v_u_db,v_l_db\n"));
}

#[test]
fn missing_geometry_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.json");
    let out = exec(&[
        "control",
        "--geometry",
        &missing.display().to_string(),
        "--theta0",
        "0",
        "--theta-k",
        "30",
        "--vd-db",
        "-25",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.json"));
}

#[test]
fn level_below_floor_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(&[
        "control",
        "--geometry",
        &config("nonuniform_12.json"),
        "--uncertainty",
        &config("eps_0.16.json"),
        "--theta0",
        "-30",
        "--theta-k",
        "40",
        "--vd-db",
        "-40",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dB"), "{err}");
    assert_eq!(summary(dir.path())["status"], "error");
}

#[test]
fn synthesize_trace_first_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(&[
        "synthesize",
        "--geometry",
        "ula:16",
        "--uncertainty",
        &config("eps_0.1.json"),
        "--mask",
        &config("mask_25db.json"),
        "--theta0",
        "-30",
        "--max-iters",
        "2",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "k,theta_k_deg,rho_db,beta_re,beta_im,d_k_db,wng");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    let expect = [(-18.7, -30.6544, 0.1276), (-43.1, -30.8132, 0.1245)];
    for (r, (th, rho, beta)) in rows.iter().zip(expect) {
        assert!((r[1] - th).abs() <= 0.1 + 1e-9);
        assert!((r[2] - rho).abs() <= 0.05);
        assert!((r[3].hypot(r[4]) - beta).abs() <= 0.005);
    }
    assert!(dir.path().join("weights.json").exists());
}

#[test]
fn zero_uncertainty_synthesis_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(&[
        "synthesize",
        "--geometry",
        "ula:10",
        "--mask",
        &config("mask_25db.json"),
        "--theta0",
        "10",
        "--grid-step",
        "0.2",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!(s["converged"], Value::Bool(true));
    assert!(s["final_d_db"].as_f64().unwrap() <= 0.05);
}

#[test]
fn unreachable_tolerance_exits_nonconverged() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(&[
        "synthesize",
        "--geometry",
        "ula:10",
        "--uncertainty",
        "constant:0.05",
        "--mask",
        &config("mask_25db.json"),
        "--theta0",
        "0",
        "--grid-step",
        "0.5",
        "--max-iters",
        "5",
        "--d-tol",
        "-1",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(dir.path().join("weights.json").exists());
    assert_eq!(summary(dir.path())["converged"], Value::Bool(false));
}

#[test]
fn bounds_reproduces_control_pattern() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(control_nonuniform(dir.path()).status.code(), Some(0));
    let again = dir.path().join("again");
    let out = exec(&[
        "bounds",
        "--geometry",
        &config("nonuniform_12.json"),
        "--uncertainty",
        &config("eps_0.16.json"),
        "--theta0",
        "-30",
        "--weights",
        &dir.path().join("weights.json").display().to_string(),
        "--out",
        &out_arg(&again),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(dir.path().join("pattern.csv")).unwrap(),
        fs::read(again.join("pattern.csv")).unwrap()
    );
}

fn write_table_weights(path: &PathBuf, table: &[(f64, f64)]) {
    let mag: Vec<f64> = table.iter().map(|t| t.0).collect();
    let ph: Vec<f64> = table.iter().map(|t| t.1).collect();
    fs::write(path, serde_json::json!({"magnitude": mag, "phase_rad": ph}).to_string()).unwrap();
}

#[test]
fn bounds_without_uncertainty_collapses() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    write_table_weights(&w, &common::ULA16_WEIGHTS);
    let out = exec(&[
        "bounds",
        "--geometry",
        "ula:16",
        "--theta0",
        "-30",
        "--weights",
        &w.display().to_string(),
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for r in pattern_rows(&dir.path().join("pattern.csv")) {
        assert_eq!(r[1], r[2]);
        assert_eq!(r[1], r[3]);
    }
}

#[test]
fn published_uniform_design_peaks_near_mask() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    write_table_weights(&w, &common::ULA16_WEIGHTS);
    let out = exec(&[
        "bounds",
        "--geometry",
        "ula:16",
        "--uncertainty",
        &config("eps_0.1.json"),
        "--theta0",
        "-30",
        "--weights",
        &w.display().to_string(),
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = pattern_rows(&dir.path().join("pattern.csv"));
    let va: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    // Sidelobe region: beyond the first nominal nulls around -30 deg.
    let i0 = rows.iter().position(|r| (r[0] + 30.0).abs() < 1e-6).unwrap();
    let mut lo = i0;
    while lo > 0 && va[lo - 1] < va[lo] {
        lo -= 1;
    }
    let mut hi = i0;
    while hi + 1 < va.len() && va[hi + 1] < va[hi] {
        hi += 1;
    }
    let mut top = f64::NEG_INFINITY;
    for i in 1..rows.len() - 1 {
        if (i < lo || i > hi) && rows[i][2] > rows[i - 1][2] && rows[i][2] >= rows[i + 1][2] {
            top = top.max(rows[i][2]);
        }
    }
    assert!((top + 25.0).abs() <= 0.1, "highest V_u sidelobe peak {top} dB");
}

fn mc_run(dir: &Path, weights: &Path) -> Output {
    exec(&[
        "mc-verify",
        "--geometry",
        &config("nonuniform_12.json"),
        "--uncertainty",
        &config("eps_0.16.json"),
        "--theta0",
        "-30",
        "--weights",
        &weights.display().to_string(),
        "--trials",
        "200",
        "--seed",
        "7",
        "--keep-trials",
        "3",
        "--out",
        &out_arg(dir),
    ])
}

#[test]
fn mc_verify_is_deterministic_and_contained() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(control_nonuniform(dir.path()).status.code(), Some(0));
    let w = dir.path().join("weights.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(mc_run(&a, &w).status.code(), Some(0));
    assert_eq!(mc_run(&b, &w).status.code(), Some(0));
    for f in ["mc_report.json", "vb_trials.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let r: Value = serde_json::from_str(&fs::read_to_string(a.join("mc_report.json")).unwrap()).unwrap();
    assert_eq!(r["containment_violations"], 0);
    assert_eq!(r["trials"], 200);
}

#[test]
fn weight_dimension_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    write_table_weights(&w, &common::ULA16_WEIGHTS);
    for cmd in ["bounds", "mc-verify"] {
        let out = exec(&[
            cmd,
            "--geometry",
            "ula:12",
            "--theta0",
            "0",
            "--weights",
            &w.display().to_string(),
            "--out",
            &out_arg(dir.path()),
        ]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
    }
}

#[test]
fn unknown_init_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(&[
        "control",
        "--geometry",
        "ula:8",
        "--theta0",
        "0",
        "--theta-k",
        "40",
        "--vd-db",
        "-25",
        "--init",
        "taylor:30",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
