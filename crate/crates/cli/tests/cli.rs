use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcs-lab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn text(o: &[u8]) -> String {
    String::from_utf8_lossy(o).into_owned()
}

const SMALL: &str = r#"
[initial]
rho = { mean = 1.0, cos = [0.2] }
u = { mean = 0.0, sin = [0.1] }
e = { mean = 1.0, cos = [0.0, 0.1] }

[time]
horizon = 0.2
dt = 0.01
save_every = 5

[resolution]
particles = 16
cells = 16
ladder = [16, 32, 64]
"#;

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, contents).unwrap();
    p
}

#[test]
fn distance_of_a_measure_to_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.csv", "x1,v1,theta,weight\n0.1,0.2,1.0,0.5\n0.7,-0.3,1.5,0.5\n");
    write(dir.path(), "b.csv", "x1,v1,theta,weight\n0.1,0.2,1.0,0.25\n");
    let o = lab(&["distance", "a.csv", "a.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert_eq!(text(&o.stdout).trim(), "0.0");
    let o = lab(&["distance", "a.csv", "b.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let d: f64 = text(&o.stdout).trim().parse().unwrap();
    assert!(d >= 0.75 - 1e-12 && d.is_finite());
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["propagation", "--config", "nowhere.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("nowhere.toml"), "{}", text(&o.stderr));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["stability", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(lab(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn invalid_config_value_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SMALL.replace("dt = 0.01", "dt = -0.01"));
    let o = lab(&["simulate-kinetic", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("dt"), "{}", text(&o.stderr));
}

#[test]
fn propagation_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "small.toml", SMALL);
    let o = lab(&["propagation", "--config", "small.toml", "--out", "run", "--seed", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let run = dir.path().join("run");
    for f in ["manifest.json", "distances.csv", "convergence.csv", "diagnostics.csv"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "propagation");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["status"], "ok");
}

#[test]
fn default_output_directory_follows_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "small.toml", SMALL);
    let o = lab(&["simulate-hydro", "--config", "small.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!(dir.path().join("runs/simulate-hydro/manifest.json").exists());
}

#[test]
fn solver_abort_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let rough = SMALL
        .replace("u = { mean = 0.0, sin = [0.1] }", "u = { mean = 0.0, sin = [0.0, 0.0, 0.0, 0.0, 0.4] }")
        .replace("horizon = 0.2", "horizon = 5.0");
    write(dir.path(), "rough.toml", &rough);
    let o = lab(&["simulate-hydro", "--config", "rough.toml", "--out", "run"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", text(&o.stderr));
    let manifest = fs::read_to_string(dir.path().join("run/manifest.json")).unwrap();
    assert!(manifest.contains("\"aborted\""));
}
