use std::fs;
use std::path::Path;

use tcs_core::experiments::{run_experiment, run_stability, run_to_dir, ExperimentConfig, Status};
use tcs_core::initial::TrigPolynomial;
use tcs_core::kernels::KernelSpec;

fn small(experiment: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(experiment);
    cfg.initial.rho = Some(TrigPolynomial::new(1.0, vec![0.2], vec![]));
    cfg.initial.u = Some(TrigPolynomial::new(0.0, vec![], vec![0.1]));
    cfg.initial.e = Some(TrigPolynomial::new(1.0, vec![0.0, 0.1], vec![]));
    cfg.time.horizon = 0.2;
    cfg.time.dt = 1e-2;
    cfg.time.save_every = 5;
    cfg.resolution.particles = 16;
    cfg.resolution.cells = 16;
    cfg.resolution.ladder = vec![16, 32, 64];
    cfg
}

#[test]
fn free_streaming_distance_grows_at_most_linearly() {
    let mut cfg = small("stability");
    cfg.kernels.phi = KernelSpec::constant(0.0);
    cfg.kernels.zeta = KernelSpec::constant(0.0);
    cfg.time.horizon = 1.0;
    cfg.stability.probes = 0;
    cfg.stability.dt_halving = false;
    let report = run_stability(&cfg).unwrap();
    for run in &report.stability {
        for r in &run.ratios {
            assert!(r.d <= 1.0 + r.t + 1e-9, "eps {}: ratio {} at t = {}", run.epsilon, r.d, r.t);
        }
    }
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timings.json" {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn same_config_and_seed_give_identical_outputs() {
    let mut cfg = small("stability");
    cfg.stability.probes = 4;
    cfg.seed = 7;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_to_dir(&cfg, a.path()).unwrap();
    run_to_dir(&cfg, b.path()).unwrap();
    let (fa, fb) = (read_dir(a.path()), read_dir(b.path()));
    assert!(fa.iter().any(|(n, _)| n == "characteristics.csv"));
    assert_eq!(fa, fb);
    assert!(a.path().join("timings.json").exists());
}

#[test]
fn every_experiment_writes_a_manifest() {
    for name in ["simulate-kinetic", "simulate-hydro", "propagation", "stability", "convergence"] {
        let mut cfg = small(name);
        cfg.stability.probes = 2;
        cfg.convergence.sweeps = vec!["rk4".into(), "manufactured".into()];
        let dir = tempfile::tempdir().unwrap();
        let report = run_to_dir(&cfg, dir.path()).unwrap();
        assert_eq!(report.status, Status::Ok, "{name}");
        let manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["experiment"], name);
        assert_eq!(manifest["status"], "ok");
    }
}

#[test]
fn propagation_writes_per_level_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_to_dir(&small("propagation"), dir.path()).unwrap();
    assert_eq!(report.propagation.len(), 3);
    for f in ["distances.csv", "convergence.csv", "diagnostics.csv", "n16/distances.csv", "n64/distances.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn hydro_blowup_aborts_with_partial_output() {
    let mut cfg = small("simulate-hydro");
    cfg.initial.u = Some(TrigPolynomial::new(0.0, vec![], vec![0.0, 0.0, 0.0, 0.0, 0.4]));
    cfg.time.horizon = 5.0;
    let dir = tempfile::tempdir().unwrap();
    let aborted = run_to_dir(&cfg, dir.path()).unwrap_err();
    assert!(aborted.error.is_solver_abort(), "{}", aborted.error);
    assert_eq!(aborted.partial.status, Status::Aborted);
    let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"aborted\""));
}

#[test]
fn invalid_config_fails_before_running() {
    let mut cfg = small("convergence");
    cfg.time.dt = -1.0;
    let err = run_experiment(&cfg).unwrap_err();
    assert_eq!(err.partial.status, Status::Failed);
    assert!(!err.error.is_solver_abort());
}

#[test]
fn under_resolved_initial_data_aborts_at_start() {
    let mut cfg = small("propagation");
    cfg.resolution.ladder = vec![8, 16, 32];
    let aborted = run_experiment(&cfg).unwrap_err();
    assert!(aborted.error.is_solver_abort());
    assert!(aborted.error.to_string().contains("t = 0:"), "{}", aborted.error);
}

#[test]
fn shipped_configs_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["demo.toml", "weak-coupling.toml"] {
        let cfg = ExperimentConfig::load(&root.join(name)).unwrap();
        assert!(cfg.initial.has_mono_kinetic(), "{name}");
    }
}
