use std::path::{Path, PathBuf};
use std::process::Command;

use fermigauss::gfs_cm::CovarianceMatrix;
use fermigauss::io::{cm_to_json, protocol_to_file, vector_to_json};
use fermigauss::jw_fock::{cm_from_state, ghz_hadamard_state, FockVector};
use fermigauss::slocc::classify_4mode_seed;
use fermigauss::locc_sim::{ghz3_protocol, ghz3_protocol_uncorrected};
use fermigauss::num_complex::Complex64;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fermigauss"));
    c.env_remove("FERMI_GAUSS_TOL");
    c
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(self.stdout.trim()).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn run(args: &[&str]) -> Run {
    run_cmd(bin().args(args))
}

fn run_cmd(c: &mut Command) -> Run {
    let out = c.output().expect("spawn");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

fn w3() -> Value {
    json!({"modes": 3, "amplitudes": [0, 0, 0, 1, 0, 1, 1, 0]})
}

fn gamma0() -> Value {
    json!({"modes": 2, "gamma": [[0, 0, 1, 0], [0, 0, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 0]]})
}

/// `O γ Oᵀ` with `O = ⊕ [[cos, sin], [−sin, cos]]`, written out by hand.
fn rotate(gamma: &[Vec<f64>], angles: &[f64]) -> Vec<Vec<f64>> {
    let n = gamma.len();
    let mut o = vec![vec![0.0; n]; n];
    for (j, t) in angles.iter().enumerate() {
        let (c, s) = (t.cos(), t.sin());
        o[2 * j][2 * j] = c;
        o[2 * j][2 * j + 1] = s;
        o[2 * j + 1][2 * j] = -s;
        o[2 * j + 1][2 * j + 1] = c;
    }
    let mut out = vec![vec![0.0; n]; n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    acc += o[r][k] * gamma[k][l] * o[c][l];
                }
            }
            out[r][c] = acc;
        }
    }
    out
}

fn cm_rows(cm: &CovarianceMatrix) -> Vec<Vec<f64>> {
    let g = cm.gamma();
    (0..g.nrows()).map(|r| (0..g.ncols()).map(|c| g[(r, c)]).collect()).collect()
}

fn sample_state() -> FockVector {
    let amps: Vec<Complex64> = [0.6, 0.1, -0.3, 0.2, 0.25, -0.4, 0.35, 0.3]
        .iter()
        .enumerate()
        .map(|(k, &x)| Complex64::new(x, 0.1 * k as f64))
        .collect();
    // keep the even-parity sector only
    let even: Vec<Complex64> = amps
        .iter()
        .enumerate()
        .map(|(k, &z)| if k.count_ones() % 2 == 0 { z } else { Complex64::new(0.0, 0.0) })
        .collect();
    FockVector::from_slice(3, &even).unwrap()
}

#[test]
fn classify_w3() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "w3.json", &w3());
    let r = run(&["classify", "--modes", "3", &f]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["label"], "W3");
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn classify_wrong_mode_count_is_input_error() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "w3.json", &w3());
    let r = run(&["classify", "--modes", "4", &f]);
    assert_eq!(r.code, 2);
    assert!(r.json()["error"].is_string());
}

#[test]
fn classify_seed_family() {
    // the CLI must report exactly what the library reports
    for (family, params, values) in [
        ("L_a2b2", "[1, 2]", vec![1.0, 2.0]),
        ("L_a2b2", "[0.5, 0.5]", vec![0.5, 0.5]),
        ("G_abcd", "[1, 0.5, 0.25, 2]", vec![1.0, 0.5, 0.25, 2.0]),
    ] {
        let r = run(&["classify", "--family", family, "--params", params]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let z: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let lib = classify_4mode_seed(&z, family).unwrap();
        assert_eq!(r.json()["label"], lib.name());
    }
}

#[test]
fn validate_gamma0() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "g0.json", &gamma0());
    let r = run(&["validate", &f]);
    assert_eq!(r.code, 0);
    let v = r.json();
    assert_eq!(v["physical"], true);
    assert_eq!(v["pure"], false);
}

#[test]
fn validate_unphysical_exits_one() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "bad.json",
        &json!({"modes": 1, "gamma": [[0, 2], [-2, 0]]}),
    );
    let r = run(&["validate", &f]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json()["physical"], false);
}

#[test]
fn equivalent_under_local_rotation() {
    let dir = TempDir::new().unwrap();
    let cm = cm_from_state(&sample_state()).unwrap();
    let rows = cm_rows(&cm);
    let a = write(dir.path(), "a.json", &cm_to_json(&cm));
    let b = write(
        dir.path(),
        "b.json",
        &json!({"modes": 3, "gamma": rotate(&rows, &[0.7, -1.9, 2.4])}),
    );
    let r = run(&["equivalent", &a, &b]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert_eq!(r.json()["equivalent"], true);

    // a state file and a CM file describing the same orbit
    let s = write(dir.path(), "s.json", &vector_to_json(&sample_state()));
    assert_eq!(run(&["equivalent", &s, &b]).code, 0);
}

#[test]
fn inequivalent_exits_one() {
    let dir = TempDir::new().unwrap();
    let ghz = write(dir.path(), "ghz.json", &vector_to_json(&ghz_hadamard_state(3).unwrap()));
    let vac = write(dir.path(), "vac.json", &cm_to_json(&CovarianceMatrix::vacuum(3)));
    let r = run(&["equivalent", &ghz, &vac]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json()["equivalent"], false);
}

#[test]
fn malformed_json_exits_two() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("broken.json");
    std::fs::write(&p, "{\"modes\": 2, \"gamma\": [[0, 1]").unwrap();
    let r = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    assert!(!r.stderr.is_empty());
    let v = r.json();
    assert_eq!(v["schema_version"], 1);
    assert!(v["error"].is_string());
}

#[test]
fn missing_file_exits_two() {
    let r = run(&["validate", "/nonexistent/cm.json"]);
    assert_eq!(r.code, 2);
}

#[test]
fn output_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "s.json", &vector_to_json(&sample_state()));
    let a = run(&["standard-form", &f]);
    let b = run(&["standard-form", &f]);
    assert_eq!(a.code, 0, "{}", a.stdout);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.contains("e-1") || a.stdout.contains("e0"));
}

#[test]
fn no_z_flips_keeps_flip_bits_zero() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "s.json", &vector_to_json(&sample_state()));
    let r = run(&["standard-form", "--no-z-flips", &f]);
    assert_eq!(r.code, 0);
    let v = r.json();
    assert!(v["ops"]["flips"].as_array().unwrap().iter().all(|b| b == false));
}

#[test]
fn tolerance_env_and_flag() {
    let dir = TempDir::new().unwrap();
    let cm = cm_from_state(&sample_state()).unwrap();
    // a uniformly shrunk copy stays physical but leaves the orbit
    let rows: Vec<Vec<f64>> = cm_rows(&cm)
        .into_iter()
        .map(|r| r.into_iter().map(|x| x * (1.0 - 1e-4)).collect())
        .collect();
    let a = write(dir.path(), "a.json", &cm_to_json(&cm));
    let b = write(dir.path(), "b.json", &json!({"modes": 3, "gamma": rows}));
    assert_eq!(run(&["equivalent", &a, &b]).code, 1);
    assert_eq!(run(&["equivalent", "--tol", "1e-2", &a, &b]).code, 0);
    let r = run_cmd(bin().env("FERMI_GAUSS_TOL", "1e-2").args(["equivalent", &a, &b]));
    assert_eq!(r.code, 0);
    assert_eq!(r.json()["tol"], 1e-2);
}

#[test]
fn gaussianity_pure_and_mixed() {
    let dir = TempDir::new().unwrap();
    // every fixed-parity pure state of three modes is Gaussian
    let w = write(dir.path(), "w3.json", &w3());
    assert_eq!(run(&["gaussianity", &w]).code, 0);
    let mut cat = vec![0.0; 16];
    cat[0] = 1.0;
    cat[15] = 1.0;
    let c = write(dir.path(), "cat4.json", &json!({"modes": 4, "amplitudes": cat}));
    let r = run(&["gaussianity", &c]);
    assert_eq!(r.code, 1, "{}", r.stdout);
    assert_eq!(r.json()["xyxy"], false);
    let ghz = write(dir.path(), "ghz.json", &vector_to_json(&ghz_hadamard_state(3).unwrap()));
    assert_eq!(run(&["gaussianity", &ghz]).code, 0);
    // maximally mixed two-mode state
    let q = 0.25;
    let rho: Vec<Vec<f64>> = (0..4).map(|r| (0..4).map(|c| if r == c { q } else { 0.0 }).collect()).collect();
    let m = write(dir.path(), "mix.json", &json!({"modes": 2, "density": rho}));
    let r = run(&["gaussianity", &m]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert_eq!(r.json()["kind"], "mixed");
}

#[test]
fn apply_identity_channel() {
    let dir = TempDir::new().unwrap();
    let id = json!({
        "in_modes": 1, "out_modes": 1,
        "A": [[0, 0], [0, 0]],
        "B": [[1, 0], [0, 1]],
        "D": [[0, 0], [0, 0]]
    });
    let ch = write(dir.path(), "id.json", &id);
    let cm = write(dir.path(), "vac.json", &json!({"modes": 1, "gamma": [[0, -1], [1, 0]]}));
    let r = run(&["apply-channel", &ch, &cm, "--probe", "3", "--seed", "5"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let v = r.json();
    assert_eq!(v["output"]["gamma"], json!([[0.0, -1.0], [1.0, 0.0]]));
    assert_eq!(v["pure"], true);
    assert!(v["probe"].is_object());
}

#[test]
fn simulate_protocol_determinism() {
    let dir = TempDir::new().unwrap();
    let (d1, d2) = ([1.5, 0.5], [0.8, 2.0]);
    let ghz = ghz_hadamard_state(3).unwrap();
    let diag = |d: [f64; 2]| {
        fermigauss::nalgebra::Matrix2::new(
            Complex64::new(d[0], 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(d[1], 0.0),
        )
    };
    let one = diag([1.0, 1.0]);
    let target = ghz.apply_product(&[diag(d1), diag(d2), one]).unwrap();
    let input = write(dir.path(), "ghz.json", &vector_to_json(&ghz));
    let tgt = write(dir.path(), "target.json", &vector_to_json(&target));
    let good = serde_json::to_value(protocol_to_file(&ghz3_protocol(d1, d2).unwrap())).unwrap();
    let bad = serde_json::to_value(protocol_to_file(&ghz3_protocol_uncorrected(d1, d2).unwrap())).unwrap();
    let good = write(dir.path(), "good.json", &good);
    let bad = write(dir.path(), "bad.json", &bad);

    let r = run(&["simulate-protocol", &good, &input, "--target", &tgt, "--check", "exact"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let v = r.json();
    assert_eq!(v["deterministic"], true);
    assert_eq!(v["branches"].as_array().unwrap().len(), 4);

    let r = run(&["simulate-protocol", &bad, &input, "--target", &tgt, "--check", "exact"]);
    assert_eq!(r.code, 1);
}

#[test]
fn normal_form_and_separability() {
    let dir = TempDir::new().unwrap();
    let w = write(dir.path(), "w3.json", &w3());
    let r = run(&["normal-form", &w, "--max-iter", "200"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert_eq!(r.json()["verdict"], "null_cone");

    let vac = write(dir.path(), "vac.json", &cm_to_json(&CovarianceMatrix::vacuum(3)));
    let r = run(&["separability", &vac, "--partition", "0,0,1"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json()["correlation_rank"], 0);

    let ghz = write(dir.path(), "ghz.json", &vector_to_json(&ghz_hadamard_state(3).unwrap()));
    let r = run(&["separability", &ghz, "--partition", "0,1,1"]);
    assert_eq!(r.code, 1);
}

#[test]
fn batch_empty_manifest() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("m.jsonl");
    std::fs::write(&m, "").unwrap();
    let r = run(&["batch", m.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.trim().is_empty());

    let report = dir.path().join("report.jsonl");
    let r = run(&["batch", m.to_str().unwrap(), "--output", report.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert_eq!(std::fs::read_to_string(&report).unwrap(), "");
}

#[test]
fn batch_rows_in_order_with_isolated_failures() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "w3.json", &w3());
    write(dir.path(), "g0.json", &gamma0());
    let mut lines = Vec::new();
    for k in 0..100 {
        let row = match k % 4 {
            0 => json!({"command": "classify", "inputs": ["w3.json"], "flags": ["--modes", "3"]}),
            1 => json!({"command": "validate", "inputs": ["g0.json"]}),
            2 => json!({"command": "validate", "inputs": ["missing.json"]}),
            _ => json!({"command": "frobnicate", "inputs": []}),
        };
        lines.push(row.to_string());
    }
    lines.push("not json".into());
    let m = dir.path().join("m.jsonl");
    std::fs::write(&m, lines.join("\n")).unwrap();
    let r = run(&["batch", m.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows: Vec<Value> = r.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 101);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row["row"], k);
        assert_eq!(row["schema_version"], 1);
        match k % 4 {
            _ if k == 100 => assert!(row["error"].is_string()),
            0 => assert_eq!(row["result"]["label"], "W3"),
            1 => assert_eq!(row["result"]["physical"], true),
            2 => {
                assert_eq!(row["exit_code"], 2);
                assert!(row["result"]["error"].is_string());
            }
            _ => assert_eq!(row["exit_code"], 2),
        }
    }
    let again = run(&["batch", m.to_str().unwrap()]);
    assert_eq!(again.stdout, r.stdout);
}
