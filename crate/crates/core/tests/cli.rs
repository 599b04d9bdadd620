use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nls-ist"))
}

fn write_field(path: &Path, f: impl Fn(f64) -> (f64, f64)) {
    let mut text = String::from("x,re_u,im_u\n");
    for i in 0..=6000 {
        let x = -30.0 + 0.01 * i as f64;
        let (re, im) = f(x);
        text.push_str(&format!("{x},{re},{im}\n"));
    }
    fs::write(path, text).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn pairs(v: &Value) -> Vec<[f64; 2]> {
    serde_json::from_value(v.clone()).unwrap()
}

#[test]
fn scatter_sech_finds_one_pole() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sech.csv");
    write_field(&input, |x| (1.0 / x.cosh(), 0.0));
    let out = dir.path().join("out");
    let status = bin()
        .arg("scatter")
        .arg(&input)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let sd = read_json(&out.join("scattering.json"));
    let poles = pairs(&sd["poles"]);
    assert_eq!(poles.len(), 1);
    assert!(poles[0][0].abs() < 1e-8 && (poles[0][1] - 0.5).abs() < 1e-8);
    let couplings = pairs(&sd["couplings"]);
    assert!(couplings[0][0].abs() < 1e-6 && (couplings[0][1] + 1.0).abs() < 1e-6);

    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "scatter");
    let hash = manifest["input_hashes"][input.to_str().unwrap()]
        .as_str()
        .unwrap();
    assert_eq!(hash.len(), 64);
    assert!(manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|o| o.as_str().unwrap().ends_with("scattering.json")));
    assert_eq!(manifest["tolerances"]["root_tol"], 1e-10);
}

#[test]
fn scatter_zero_potential_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("zeros.csv");
    write_field(&input, |_| (0.0, 0.0));
    let status = bin()
        .arg("scatter")
        .arg(&input)
        .arg("--out-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let sd = read_json(&dir.path().join("scattering.json"));
    assert!(pairs(&sd["poles"]).is_empty());
    assert!(pairs(&sd["r"]).iter().all(|r| r[0] == 0.0 && r[1] == 0.0));
}

#[test]
fn non_finite_sample_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    write_field(&input, |x| {
        if (x - 1.0).abs() < 1e-9 {
            (f64::NAN, 0.0)
        } else {
            (1.0 / x.cosh(), 0.0)
        }
    });
    let out = bin()
        .arg("scatter")
        .arg(&input)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "invalid-sample");
}

#[test]
fn synthesize_then_scatter_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    fs::write(
        &params,
        r#"{"poles": [[0.0, 1.0], [0.5, 0.5]], "couplings": [[2.0, 0.0], [0.0, 1.0]]}"#,
    )
    .unwrap();
    let status = bin()
        .args(["synthesize"])
        .arg(&params)
        .args(["--grid", "-30:30:6001", "--t-list", "0,1", "--out-dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let field = dir.path().join("field_t0.csv");
    assert!(dir.path().join("field_t1.csv").exists());
    let out = dir.path().join("scatter");
    let status = bin()
        .arg("scatter")
        .arg(&field)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let mut poles = pairs(&read_json(&out.join("scattering.json"))["poles"]);
    poles.sort_by(|a, b| a[0].total_cmp(&b[0]));
    assert_eq!(poles.len(), 2);
    assert!((poles[0][0]).abs() < 1e-6 && (poles[0][1] - 1.0).abs() < 1e-6);
    assert!((poles[1][0] - 0.5).abs() < 1e-6 && (poles[1][1] - 0.5).abs() < 1e-6);
}

#[test]
fn verify_stability_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "verify-stability",
            "--t-list",
            "1,2",
            "--n-modes",
            "4096",
            "--half-width",
            "150",
            "--dt",
            "0.01",
            "--plot",
            "--out-dir",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["decay.csv", "report.json", "decay.png", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_arguments_exit_with_input_error() {
    let out = bin()
        .args(["verify-stability", "--sign", "+", "--t-list", "-5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
