use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};
use tempfile::TempDir;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_incompat"));
    for var in ["INCOMPAT_TOL_PSD", "INCOMPAT_TOL_GAP", "INCOMPAT_GRID", "INCOMPAT_TOL", "INCOMPAT_SEED"] {
        cmd.env_remove(var);
    }
    cmd
}

fn real(rows: &[&[f64]]) -> Value {
    json!(rows
        .iter()
        .map(|r| r.iter().map(|&x| json!([x, 0.0])).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn matrix_doc(dim: usize, matrices: &[(&str, Value)]) -> String {
    let m: serde_json::Map<String, Value> = matrices.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    json!({ "dim": dim, "matrices": m }).to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], file: &Path) -> Output {
    bin().args(args).arg(file).output().unwrap()
}

fn run_json(args: &[&str], file: &Path) -> (Value, i32) {
    let out = bin().arg("--format").arg("json").args(args).arg(file).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (v, out.status.code().unwrap())
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

fn sharp_pair() -> String {
    matrix_doc(2, &[("Q", real(&[&[0.5, 0.5], &[0.5, 0.5]])), ("P", real(&[&[0.0, 0.0], &[0.0, 1.0]]))])
}

fn half_pair() -> String {
    let half = real(&[&[0.5, 0.0], &[0.0, 0.5]]);
    matrix_doc(2, &[("Q", half.clone()), ("P", half)])
}

#[test]
fn check_pair_examples() {
    let dir = TempDir::new().unwrap();
    let (v, code) = run_json(&["check-pair"], &write(&dir, "half.json", &half_pair()));
    assert_eq!((v["verdict"].as_str(), code), (Some("compatible"), 0));
    assert_eq!(num(&v, "mu"), 0.0);

    let (v, code) = run_json(&["check-pair"], &write(&dir, "sharp.json", &sharp_pair()));
    assert_eq!((v["verdict"].as_str(), code), (Some("incompatible"), 3));
    assert!((num(&v, "lambda_star") - 0.207107).abs() < 1e-6);
    assert!((num(&v, "lambda0") - (1.0 + 1.0 / SQRT2)).abs() < 1e-6);
    assert!((num(&v, "mu") - (SQRT2 - 1.0)).abs() < 1e-6);

    let bad = matrix_doc(2, &[("Q", real(&[&[1.5, 0.0], &[0.0, -0.5]])), ("P", real(&[&[0.0, 0.0], &[0.0, 1.0]]))]);
    let out = run(&["check-pair"], &write(&dir, "bad.json", &bad));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("matrix `Q`") && err.contains("E >= 0 violated"), "{err}");
}

#[test]
fn identical_projectors_are_marginal() {
    let dir = TempDir::new().unwrap();
    let proj = real(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let doc = matrix_doc(2, &[("Q", proj.clone()), ("P", proj)]);
    let (v, code) = run_json(&["check-pair"], &write(&dir, "proj.json", &doc));
    assert_eq!((v["verdict"].as_str(), code), (Some("marginal"), 4));
}

#[test]
fn json_key_set_is_fixed() {
    let dir = TempDir::new().unwrap();
    let sharp = write(&dir, "sharp.json", &sharp_pair());
    let want = ["gap", "lambda0", "lambda_star", "mu", "phi_star", "value", "verdict"];
    for args in [&["check-pair"][..], &["chsh"], &["multi", "--mode", "dichotomic"]] {
        let file = if args[0] == "multi" {
            let t = real(&[&[0.5, 0.0], &[0.0, 0.5]]);
            write(&dir, "multi.json", &matrix_doc(2, &[("T1", t.clone()), ("T2", t)]))
        } else {
            sharp.clone()
        };
        let (v, _) = run_json(args, &file);
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, want, "{args:?}");
    }
}

#[test]
fn malformed_input_names_the_position() {
    let dir = TempDir::new().unwrap();
    let text = "{\n  \"dim\": 2,\n  \"matrices\": {\"Q\": [[[1, 0], [\"x\", 0]], [[0, 0], [0, 0]]]}\n}";
    let out = run(&["check-pair"], &write(&dir, "bad.json", text));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3, column"), "{err}");
    let out = run(&["check-pair"], &dir.path().join("missing.json"));
    assert_eq!(out.status.code(), Some(1));
    let out = bin().arg("no-such-command").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reads_standard_input() {
    let mut child = bin()
        .args(["--format", "json", "chsh", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(sharp_pair().as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((num(&v, "value") - SQRT2).abs() < 1e-6);
}

#[test]
fn chsh_examples() {
    let dir = TempDir::new().unwrap();
    let (v, code) = run_json(&["chsh"], &write(&dir, "sharp.json", &sharp_pair()));
    assert!((num(&v, "value") - SQRT2).abs() < 1e-6);
    assert_eq!(code, 3);
    assert!(v["phi_star"].is_f64());

    // η = ½: Q = (1 + σx/2)/2, P = (1 − σz/2)/2.
    let noisy = matrix_doc(
        2,
        &[("Q", real(&[&[0.5, 0.25], &[0.25, 0.5]])), ("P", real(&[&[0.25, 0.0], &[0.0, 0.75]]))],
    );
    let (v, code) = run_json(&["chsh"], &write(&dir, "noisy.json", &noisy));
    assert!(num(&v, "value") <= 1.0);
    assert_eq!((v["verdict"].as_str(), code), (Some("compatible"), 0));

    let (v, _) = run_json(&["chsh"], &write(&dir, "half.json", &half_pair()));
    assert!(num(&v, "value").abs() < 1e-9);
}

#[test]
fn witness_round_trip() {
    let dir = TempDir::new().unwrap();
    let witness = dir.path().join("witness.json");
    let out = bin()
        .args(["chsh", "--witness"])
        .arg(&witness)
        .arg(write(&dir, "sharp.json", &sharp_pair()))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("re-verified value 1.41421356"), "{text}");

    let raw = std::fs::read_to_string(&witness).unwrap();
    let doc: Value = serde_json::from_str(&raw).unwrap();
    assert_eq!(doc["dim"], 4);
    let psi = doc["vectors"]["psi"].as_array().unwrap();
    let norm: f64 = psi
        .iter()
        .map(|z| z[0].as_f64().unwrap().powi(2) + z[1].as_f64().unwrap().powi(2))
        .sum();
    assert!((norm - 1.0).abs() < 1e-12);
    for name in ["A1", "A2", "B1", "B2"] {
        assert_eq!(doc["matrices"][name].as_array().unwrap().len(), 4);
    }

    // The witness file is valid input: its A₁ ⊗ 1, A₂ ⊗ 1 anticommute.
    let (v, code) = run_json(&["vn"], &witness);
    assert_eq!(code, 0);
    assert!((num(&v, "value") - SQRT2).abs() < 1e-12);
}

#[test]
fn vn_examples() {
    let dir = TempDir::new().unwrap();
    let sx = real(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let sz = real(&[&[1.0, 0.0], &[0.0, -1.0]]);
    let doc = matrix_doc(2, &[("A1", sx), ("A2", sz.clone())]);
    let out = run(&["vn"], &write(&dir, "pauli.json", &doc));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let field = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}: ")))
            .unwrap_or_else(|| panic!("{key} missing in {text}"))
            .parse()
            .unwrap()
    };
    assert!((field("fixed_b_value") - SQRT2).abs() < 1e-12);
    assert!((field("optimal_value") - SQRT2).abs() < 1e-12);

    let (c, s) = (std::f64::consts::FRAC_PI_6.cos(), std::f64::consts::FRAC_PI_6.sin());
    let rotated = real(&[&[c, s], &[s, -c]]);
    let doc = matrix_doc(2, &[("A1", sz), ("A2", rotated)]);
    let out = run(&["vn"], &write(&dir, "rotated.json", &doc));
    let text = String::from_utf8(out.stdout).unwrap();
    let field = |key: &str| -> f64 {
        text.lines().find_map(|l| l.strip_prefix(&format!("{key}: "))).unwrap().parse().unwrap()
    };
    assert!((field("fixed_b_value") - 1.25f64.sqrt()).abs() < 1e-12);
    assert!((field("optimal_value") - 1.5f64.sqrt()).abs() < 1e-12);

    let doc = matrix_doc(2, &[("A1", real(&[&[1.0, 0.0], &[0.0, 2.0]])), ("A2", real(&[&[3.0, 0.0], &[0.0, -1.0]]))]);
    let (v, code) = run_json(&["vn"], &write(&dir, "diag.json", &doc));
    assert_eq!((v["verdict"].as_str(), code), (Some("compatible"), 3));
}

#[test]
fn multi_examples() {
    let dir = TempDir::new().unwrap();
    let half = real(&[&[0.5, 0.0], &[0.0, 0.5]]);
    let doc = matrix_doc(2, &[("T1", half.clone()), ("T2", half.clone()), ("T3", half)]);
    let (v, code) = run_json(&["multi", "--mode", "dichotomic"], &write(&dir, "halves.json", &doc));
    assert_eq!((v["verdict"].as_str(), code), (Some("compatible"), 0));

    let pauli = json!({
        "dim": 2,
        "matrices": {
            "T1": [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]],
            "T2": [[[0.5, 0], [0, -0.5]], [[0, 0.5], [0.5, 0]]],
            "T3": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]
        }
    });
    let (v, code) = run_json(&["multi", "--mode", "dichotomic"], &write(&dir, "pauli.json", &pauli.to_string()));
    assert_eq!((v["verdict"].as_str(), code), (Some("incompatible"), 3));
    assert!(num(&v, "lambda0") > 1.0 + 1e-3);

    let diag = |a: f64, b: f64| real(&[&[a, 0.0, 0.0], &[0.0, b, 0.0], &[0.0, 0.0, 1.0 - a - b]]);
    let doc = matrix_doc(
        3,
        &[
            ("Q1", diag(0.2, 0.5)),
            ("Q2", diag(0.3, 0.1)),
            ("Q3", diag(0.5, 0.4)),
            ("P1", diag(0.6, 0.1)),
            ("P2", diag(0.1, 0.7)),
            ("P3", diag(0.3, 0.2)),
        ],
    );
    let (v, code) = run_json(&["multi", "--mode", "nvalued"], &write(&dir, "diag.json", &doc));
    assert_eq!((v["verdict"].as_str(), code), (Some("compatible"), 0));

    let t = real(&[&[0.5]]);
    let many: Vec<(String, Value)> = (1..=13).map(|k| (format!("T{k}"), t.clone())).collect();
    let many: Vec<(&str, Value)> = many.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    let out = run(&["multi", "--mode", "dichotomic"], &write(&dir, "many.json", &matrix_doc(1, &many)));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("size limit"));
}

#[test]
fn nosignal_examples() {
    let dir = TempDir::new().unwrap();
    let q = [0.25; 4];
    let r1 = [0.3, 0.7];
    let r2 = [0.9, 0.1];
    let triple = |r: &[f64; 2]| -> Vec<f64> { q.iter().flat_map(|a| r.iter().map(move |b| a * b)).collect() };
    let doc = json!({ "dims": [2, 2, 2, 2], "t1": triple(&r1), "t2": triple(&r2) });
    let (v, code) = run_json(&["nosignal"], &write(&dir, "product.json", &doc.to_string()));
    assert_eq!(code, 0);
    assert!(num(&v, "value").abs() < 1e-15);

    let corr = [0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5];
    let doc = json!({ "dims": [2, 2, 2, 2], "t1": corr, "t2": corr });
    let out = run(&["nosignal"], &write(&dir, "corr.json", &doc.to_string()));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("p(0,0,0,0) = 0.5") && text.contains("p(1,1,1,1) = 0.5"), "{text}");
    assert_eq!(text.lines().filter(|l| l.ends_with("= 0")).count(), 14);

    let doc = json!({ "dims": [1, 2, 1, 1], "t1": [0.5, 0.5], "t2": [0.6, 0.4] });
    let out = run(&["nosignal"], &write(&dir, "signal.json", &doc.to_string()));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("signaling detected"));
}

#[test]
fn flags_and_environment() {
    let dir = TempDir::new().unwrap();
    let sharp = write(&dir, "sharp.json", &sharp_pair());
    // A coarse grid still refines to the optimum.
    let out = bin().args(["--format", "json", "--grid", "16", "chsh"]).arg(&sharp).output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((num(&v, "value") - SQRT2).abs() < 1e-6);

    // A band wider than the violation turns the verdict marginal.
    let out = bin()
        .args(["--format", "json", "chsh"])
        .arg(&sharp)
        .env("INCOMPAT_TOL", "0.5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));

    // Loosened PSD tolerance accepts a slightly negative effect.
    let nearly = matrix_doc(2, &[("Q", real(&[&[1.0, 0.0], &[0.0, -1e-6]])), ("P", real(&[&[0.5, 0.0], &[0.0, 0.5]]))]);
    let nearly = write(&dir, "nearly.json", &nearly);
    assert_eq!(run(&["check-pair"], &nearly).status.code(), Some(1));
    let out = bin().args(["check-pair"]).arg(&nearly).env("INCOMPAT_TOL_PSD", "1e-5").output().unwrap();
    assert_ne!(out.status.code(), Some(1));

    let out = bin().args(["check-pair", "--samples", "3", "--seed", "7"]).arg(&sharp).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("mu diagnostic (seed 7)"), "{text}");
}
