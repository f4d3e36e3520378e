use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cavity_spt::cli::output::sha256_hex;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_cavity-spt");

const DICKE: &str = r#"
experiment = "dicke-critical"

[dicke-critical]
omega_z_per_s = 1.4e9
omega_per_s = 1.4e9
spin = 0.5
temperatures_k = [0.0, 0.01]
"#;

const ISING: &str = r#"
experiment = "ising-phase-diagram"

[ising-phase-diagram]
omega_z_per_s = 1.0
omega_per_s = 1.0
temperature_k = 0.0
geometry = "nearest-neighbor-pbc"
sublattices = "two"
j_per_s = { min = -0.6, max = 0.6, points = 5 }
lambda_bar_per_s = { min = 0.0, max = 1.0, points = 6 }
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("CAVITY_SPT_THREADS").output().expect("spawn cavity-spt")
}

fn run_ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let manifest = String::from_utf8(out.stdout).unwrap();
    serde_json::from_str(&fs::read_to_string(manifest.trim()).unwrap()).unwrap()
}

fn error_of(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is one JSON record");
    v["error"].clone()
}

fn file_hashes(manifest: &Value) -> Vec<String> {
    manifest["files"].as_array().unwrap().iter().map(|f| f["sha256"].as_str().unwrap().to_owned()).collect()
}

#[test]
fn manifest_hashes_match_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.toml", DICKE);
    let prefix = dir.path().join("d");
    let m = run_ok(&["run", "--config", cfg.to_str().unwrap(), "--out", prefix.to_str().unwrap()]);
    for f in m["files"].as_array().unwrap() {
        let bytes = fs::read(f["path"].as_str().unwrap()).unwrap();
        assert_eq!(sha256_hex(&bytes), f["sha256"].as_str().unwrap());
        assert_eq!(bytes.len() as u64, f["bytes"].as_u64().unwrap());
    }
    assert!(dir.path().join("d_critical.csv").exists());
    assert!(dir.path().join("d_manifest.json").exists());
}

#[test]
fn zero_temperature_coupling_and_unit_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.toml", DICKE);
    let prefix = dir.path().join("d");
    let m = run_ok(&["run", cfg.to_str().unwrap(), "--out", prefix.to_str().unwrap()]);
    let lc = m["results"]["critical_couplings"][0]["lambda_c_per_s"].as_f64().unwrap();
    assert!((lc - (1.4e9f64 * 1.4e9).sqrt() / 2.0).abs() < 1e-6);

    // Kelvin in the config, rad/s internally, consistent with the echoed factor.
    let k = m["conversion_factors"]["kelvin_to_rad_s"].as_f64().unwrap();
    let th = m["internal"]["thermal_per_s"][1].as_f64().unwrap();
    assert!((th - 0.01 * k).abs() <= 1e-12 * th);
    assert_eq!(m["config"]["dicke-critical"]["temperatures_k"][1].as_f64(), Some(0.01));
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "i.toml", ISING);
    let c = cfg.to_str().unwrap();
    let a = run_ok(&["run", c, "--out", dir.path().join("a").to_str().unwrap(), "--threads", "1"]);
    let b = run_ok(&["run", c, "--out", dir.path().join("b").to_str().unwrap(), "--threads", "4"]);
    assert_eq!(file_hashes(&a), file_hashes(&b));
    assert_eq!(a["results"], b["results"]);
}

#[test]
fn existing_outputs_are_refused_unless_overwriting() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.toml", DICKE);
    let prefix = dir.path().join("d");
    let args = ["run", "--config", cfg.to_str().unwrap(), "--out", prefix.to_str().unwrap()];
    run_ok(&args);
    let csv = dir.path().join("d_critical.csv");
    let before = fs::read(&csv).unwrap();

    let err = error_of(&run(&args));
    assert_eq!(err["kind"], "output-exists");
    assert_eq!(fs::read(&csv).unwrap(), before);

    let mut again = args.to_vec();
    again.push("--overwrite");
    run_ok(&again);
}

#[test]
fn unknown_key_yields_config_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &DICKE.replace("spin = 0.5", "spin = 0.5\nomega_zz_per_s = 1.0"));
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    let err = error_of(&out);
    assert_eq!(err["kind"], "config");
    let msg = err["message"].as_str().unwrap();
    assert!(msg.contains("omega_zz_per_s"), "{msg}");
    assert!(fs::read_dir(dir.path()).unwrap().count() == 1, "nothing written on failure");
}

#[test]
fn invalid_values_and_missing_files_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "neg.toml", &DICKE.replace("spin = 0.5", "spin = -1.0"));
    let err = error_of(&run(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]));
    assert_eq!(err["kind"], "invalid-argument");

    let err = error_of(&run(&["run", dir.path().join("missing.toml").to_str().unwrap(), "--out", "x"]));
    assert_eq!(err["kind"], "io");

    let out = Command::new(BIN)
        .args(["run", cfg.to_str().unwrap(), "--out", "x"])
        .env("CAVITY_SPT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(error_of(&out)["kind"], "invalid-argument");
}
