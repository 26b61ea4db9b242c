use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(cmd: &str, cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracmon"))
        .args([cmd, "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap()
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn matrix(rows: [[&str; 2]; 2]) -> Value {
    serde_json::json!(rows)
}

#[test]
fn validate_accepts_the_one_three_system() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("validate", &config("one_three.json"), dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(dir.path().join("validate.json"));
    assert_eq!(v["violations"], serde_json::json!([]));
    assert_eq!(v["schemaVersion"], 1);
    assert!(v["simpleRootSamples"].as_array().unwrap().iter().all(|s| s["simple"] == true));
}

#[test]
fn monodromy_complex_on_one_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("monodromy-complex", &config("one_two.json"), dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(dir.path().join("monodromy.json"));
    assert_eq!(v["report"]["matrix"], matrix([["1", "0"], ["-1/2", "1"]]));
    assert_eq!(v["report"]["sublatticeMatrix"]["matrix"], serde_json::json!([[1, 0], [-1, 1]]));
    assert!(dir.path().join("extrapolation.csv").exists());
}

#[test]
fn golden_monodromy_matrices() {
    for (cfg, want) in [("one_three.json", "-1/3"), ("two_three.json", "-1/6")] {
        let dir = tempfile::tempdir().unwrap();
        let o = run("monodromy-complex", &config(cfg), dir.path());
        assert_eq!(stdout_json(&o)["matrix"], matrix([["1", "0"], [want, "1"]]), "{cfg}");
    }
}

#[test]
fn spectrum_on_two_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("spectrum", &config("two_three.json"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(dir.path().join("cell_transport.json"));
    assert_eq!(v["cellTransport"]["matrix"], matrix([["1", "1/6"], ["0", "1"]]));
    assert!(!v["cellTransport"]["frames"].as_array().unwrap().is_empty());
    let mut rd = csv::Reader::from_path(dir.path().join("lattice.csv")).unwrap();
    assert_eq!(rd.headers().unwrap().iter().take(4).collect::<Vec<_>>(), ["h", "j", "n1", "n2"]);
    assert_eq!(rd.records().count() as u64, v["points"].as_u64().unwrap());
    let m = read_json(dir.path().join("plot_manifest.json"));
    assert_eq!(m["plots"][0]["file"], "lattice.csv");
}

#[test]
fn transport_and_residue_golden_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("transport", &config("one_three.json"), dir.path());
    assert_eq!(stdout_json(&o)["final"], "delta + delta_0 - delta_1 + delta_2");
    let o = run("residue", &config("one_two.json"), dir.path());
    for p in stdout_json(&o)["points"].as_array().unwrap() {
        assert!(p["deviationFromTwoPi"].as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for cmd in ["discriminant", "period-scan", "roots-track"] {
        let oa = run(cmd, &config("one_three.json"), a.path());
        let ob = run(cmd, &config("one_three.json"), b.path());
        assert_eq!(oa.stdout, ob.stdout);
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 6);
    for n in names {
        assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
    let text = std::fs::read_to_string(a.path().join("periods.csv")).unwrap();
    let first = text.lines().nth(1).unwrap().split(',').nth(2).unwrap().to_string();
    assert_eq!(first.split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn unknown_field_is_reported_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\n  \"system\": { \"m\": 1, \"n\": 3, \"nPrime\": 4,\n    \"mPrim\": 1 }\n}\n");
    let o = run("validate", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["kind"], "ConfigParse");
    let msg = e["error"]["message"].as_str().unwrap();
    assert!(msg.contains("line 3") && msg.contains("mPrim"), "{msg}");
}

#[test]
fn inadmissible_system_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"system": {"m": 2, "n": 3, "nPrime": 1, "mPrime": 1, "tildeR": [{"coeff": "1"}]}}"#);
    let o = run("validate", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    let v = stdout_json(&o);
    assert!(v["violations"].as_array().unwrap().iter().any(|x| x == "nPrime <= n/2"));
    let o = run("monodromy-complex", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "Inadmissible");
}

#[test]
fn numerical_failure_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let body = std::fs::read_to_string(config("one_three.json")).unwrap().replace("\"hbar\": 0.002", "\"hbar\": 0.05");
    let cfg = write_config(dir.path(), "coarse.json", &body);
    let o = run("spectrum", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"]["kind"], "LatticeGap");
}

#[test]
fn missing_block_and_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("spectrum", &config("one_two.json"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["error"]["message"].as_str().unwrap().contains("spectrum"));
    let o = Command::new(env!("CARGO_BIN_EXE_fracmon"))
        .args(["validate", "--tolerance-scale", "-1", "--config"])
        .arg(config("one_three.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
