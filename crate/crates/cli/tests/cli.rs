use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use compactlab::container::{read_array, write_array, Array, DType};
use compactlab::{CVector, Complex64};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_compactlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

const MINIMAL: &str = r#"{
  "scenario": "cli-test",
  "setup": {"n": 1, "size": 16},
  "family": {"kind": "random-states", "count": 3},
  "diagnostics": ["frame-identities"],
  "assertions": [{"metric": "frame-identities.resolution_residual", "op": "<=", "value": 1e-10}]
}"#;

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn no_arguments_lists_the_catalog() {
    let o = run(&[]);
    assert!(o.status.success());
    let lines = String::from_utf8_lossy(&o.stdout).lines().count();
    assert!(lines >= 6, "{}", text(&o));
    assert!(text(&o).contains("weyl-zero-field-sanity"));
}

#[test]
fn sanity_scenario_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--scenario", "weyl-zero-field-sanity", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert!(out.join("frame-identities.csv").exists());
    assert!(out.join("quantizer-unitarity.csv").exists());
    assert!(out.join("family.clab").exists());
    let frame = out.join("frame.clab");
    assert!(frame.exists() && out.join("frame.clab.sigma.json").exists());

    let again = dir.path().join("again");
    let o = run(&[
        "run",
        "--scenario",
        "weyl-zero-field-sanity",
        "--out",
        again.to_str().unwrap(),
        "--frame",
        frame.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let reloaded: serde_json::Value = serde_json::from_str(&fs::read_to_string(again.join("summary.json")).unwrap()).unwrap();
    let residual = &reloaded["diagnostics"][0]["metrics"]["resolution_residual"];
    assert!(residual.as_f64().unwrap() < 1e-10, "{residual}");

    let small = write(dir.path(), "small.json", &MINIMAL.replace("\"size\": 16", "\"size\": 8"));
    let o = run(&["run", "--config", &small, "--frame", frame.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
}

#[test]
fn validation_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", MINIMAL);
    let o = run(&["validate", "--config", &good]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));

    let unknown = write(dir.path(), "unknown.json", &MINIMAL.replace("\"count\": 3", "\"count\": 3, \"colour\": 1"));
    let o = run(&["validate", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert_eq!(msg.lines().filter(|l| l.starts_with("  ")).count(), 1, "{msg}");
    assert!(msg.contains("family") && msg.contains("colour"), "{msg}");

    let inf = write(
        dir.path(),
        "inf.json",
        &MINIMAL.replace("\"diagnostics\"", "\"solid_space\": {\"p\": \"inf\"}, \"diagnostics\""),
    );
    let o = run(&["run", "--config", &inf]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("absolutely continuous"), "{}", text(&o));

    let out = dir.path().join("strict");
    let strict = write(
        dir.path(),
        "strict.json",
        &MINIMAL
            .replace("\"value\": 1e-10", "\"value\": 1e-30")
            .replace("\"diagnostics\"", &format!("\"output_dir\": {:?}, \"diagnostics\"", out)),
    );
    let o = run(&["run", "--config", &strict]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o));
    assert!(String::from_utf8_lossy(&o.stderr).contains("frame-identities.resolution_residual"));

    let o = run(&["run", "--scenario", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_override_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", MINIMAL);
    let mut csv = Vec::new();
    for (i, seed) in ["5", "5", "6"].iter().enumerate() {
        let out = dir.path().join(format!("o{i}"));
        let o = run(&["run", "--config", &cfg, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", text(&o));
        csv.push(fs::read(out.join("frame-identities.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
    let o = bin()
        .env("COMPACTLAB_THREADS", "1")
        .args(["diagnose", "--experiment", &cfg, "--seed"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "unknown flag is a usage error");
}

#[test]
fn quantize_and_op_write_containers() {
    let dir = tempfile::tempdir().unwrap();
    let setup = write(dir.path(), "setup.json", r#"{"n": 1, "size": 8}"#);
    // coefficient 1 at the identity point gives N^{-1} times the identity
    let mut f = CVector::zeros(64);
    f[0] = Complex64::new(1.0, 0.0);
    let sym = dir.path().join("f.clab");
    write_array(&sym, &Array::from_vector(&f), DType::Complex128).unwrap();
    let out = dir.path().join("t.clab");
    let o = run(&[
        "quantize",
        "--pi",
        &setup,
        "--symbol",
        sym.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--dtype",
        "c128",
    ]);
    assert!(o.status.success(), "{}", text(&o));
    let t = read_array(&out).unwrap().into_matrix().unwrap();
    let want = compactlab::CMatrix::identity(8, 8) * Complex64::new(1.0 / 8.0, 0.0);
    assert!((t - want).norm() < 1e-12);

    let op = dir.path().join("op.clab");
    let setup32 = write(dir.path(), "setup32.json", r#"{"n": 1, "size": 32}"#);
    let o = run(&["magweyl", "op", "--config", &setup32, "--out", op.to_str().unwrap(), "--dtype", "c128"]);
    assert!(o.status.success(), "{}", text(&o));
    let m = read_array(&op).unwrap().into_matrix().unwrap();
    assert_eq!((m.nrows(), m.ncols()), (32, 32));
    let asym = (&m - m.adjoint()).norm() / m.norm();
    // self-adjoint up to the wrap-around of the lattice shifts
    assert!(asym < 1e-7, "{asym}");
}
