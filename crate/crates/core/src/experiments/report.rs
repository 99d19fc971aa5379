//! Experiment reports and their on-disk layout.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hydro::HydroTrajectory;
use crate::kinetic::{KineticTrajectory, VelocityEnvelope};
use crate::measures::Subsample;

use super::config::ExperimentConfig;

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Running,
    Ok,
    /// A solver stopped early; the report holds what was computed before.
    Aborted,
    /// Bad input, discovered after the manifest was written.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceRow {
    pub t: f64,
    pub d: f64,
}

/// One row of `diagnostics.csv`, shared by both solvers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub run: String,
    pub solver: &'static str,
    pub t: f64,
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    /// Smallest particle temperature or smallest internal energy.
    pub min_temperature: f64,
    pub max_speed: f64,
    pub envelope: Option<f64>,
    pub smoothness: Option<f64>,
}

impl DiagnosticRow {
    pub fn kinetic(run: &str, traj: &KineticTrajectory, envelope: Option<&VelocityEnvelope>) -> Vec<Self> {
        let t0 = traj.diagnostics.first().map_or(0.0, |d| d.t);
        traj.diagnostics
            .iter()
            .map(|d| Self {
                run: run.to_owned(),
                solver: "kinetic",
                t: d.t,
                mass: d.mass,
                momentum: d.momentum.first().copied().unwrap_or(0.0),
                energy: d.thermal,
                min_temperature: d.min_theta,
                max_speed: d.max_speed,
                envelope: envelope.map(|e| e.bound(d.t - t0)),
                smoothness: None,
            })
            .collect()
    }

    pub fn hydro(run: &str, traj: &HydroTrajectory) -> Vec<Self> {
        traj.diagnostics
            .iter()
            .zip(&traj.states)
            .map(|(d, s)| Self {
                run: run.to_owned(),
                solver: "hydro",
                t: d.t,
                mass: d.mass,
                momentum: d.momentum,
                energy: d.energy,
                min_temperature: d.min_e,
                max_speed: s.u.iter().map(|u| u.abs()).fold(0.0, f64::max),
                envelope: None,
                smoothness: Some(d.smoothness),
            })
            .collect()
    }
}

/// A named invariant with its measured value and the bound it must respect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.to_owned(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.to_owned(),
            value,
            bound,
            pass: value >= bound,
        }
    }
}

/// Distance series of one rung of the propagation ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationLevel {
    pub resolution: usize,
    pub max_distance: f64,
    pub argmax_t: f64,
    pub distances: Vec<DistanceRow>,
}

/// Ratio `d(mu_t, nu_t) / d(mu_0, nu_0)` for one perturbation size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRun {
    pub epsilon: f64,
    pub d0: f64,
    pub sup_ratio: f64,
    pub sup_time: f64,
    pub ratios: Vec<DistanceRow>,
    /// Same run with half the time step.
    pub halved_sup_ratio: Option<f64>,
    /// `|halved - sup| / sup`.
    pub halving_change: Option<f64>,
}

/// Uniform bound of `Delta_z(t) / int_0^t d(mu, nu)` over the probes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicsSummary {
    pub epsilon: f64,
    pub probes: usize,
    pub max_ratio: f64,
    pub worst_probe: usize,
    pub halved_max_ratio: Option<f64>,
    pub halving_change: Option<f64>,
}

/// One entry of a refinement table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub sweep: String,
    pub label: String,
    pub level: usize,
    pub resolution: Option<usize>,
    pub dt: Option<f64>,
    pub error: f64,
    /// `log2(error[level - 1] / error[level])`.
    pub order: Option<f64>,
    /// Error did not grow from the previous level.
    pub monotone: bool,
}

/// Build the rows of one sweep, filling in orders and monotonicity.
pub fn convergence_rows(
    sweep: &str,
    label: &str,
    levels: &[(Option<usize>, Option<f64>, f64)],
) -> Vec<ConvergenceRow> {
    levels
        .iter()
        .enumerate()
        .map(|(k, &(resolution, dt, error))| {
            let prev = k.checked_sub(1).map(|p| levels[p].2);
            ConvergenceRow {
                sweep: sweep.to_owned(),
                label: label.to_owned(),
                level: k,
                resolution,
                dt,
                error,
                order: prev.map(|p| (p / error).log2()),
                monotone: prev.is_none_or(|p| error <= p),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsampleRecord {
    pub context: String,
    #[serde(flatten)]
    pub subsample: Subsample,
}

/// A file produced by a run, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub path: String,
    pub contents: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub version: &'static str,
    pub seed: u64,
    pub status: Status,
    pub error: Option<String>,
    pub config: ExperimentConfig,
    pub distances: Vec<DistanceRow>,
    pub max_distance: Option<f64>,
    pub propagation: Vec<PropagationLevel>,
    pub stability: Vec<StabilityRun>,
    pub characteristics: Option<CharacteristicsSummary>,
    pub convergence: Vec<ConvergenceRow>,
    pub checks: Vec<Check>,
    pub subsamples: Vec<SubsampleRecord>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub diagnostics: Vec<DiagnosticRow>,
    #[serde(skip)]
    pub files: Vec<OutputFile>,
    /// Wall-clock seconds per phase; kept out of the manifest so that
    /// reruns stay byte-identical.
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl ExperimentReport {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            experiment: cfg.experiment.clone(),
            version: VERSION,
            seed: cfg.seed,
            status: Status::Running,
            error: None,
            config: cfg.clone(),
            distances: Vec::new(),
            max_distance: None,
            propagation: Vec::new(),
            stability: Vec::new(),
            characteristics: None,
            convergence: Vec::new(),
            checks: Vec::new(),
            subsamples: Vec::new(),
            notes: Vec::new(),
            diagnostics: Vec::new(),
            files: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn add_file(&mut self, path: impl Into<String>, contents: Vec<u8>) {
        self.files.push(OutputFile {
            path: path.into(),
            contents,
        });
    }

    /// Run `f`, recording its wall-clock time under `phase`.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push((phase.to_owned(), start.elapsed().as_secs_f64()));
        out
    }

    pub fn failing_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn manifest_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }

    /// Write the manifest alone, before any solver runs.
    pub fn write_manifest(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("manifest.json"), &self.manifest_json())
    }

    /// Write the manifest together with every CSV series of the report.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        self.write_manifest(dir)?;
        if !self.distances.is_empty() {
            write_file(&dir.join("distances.csv"), &csv_bytes(&self.distances)?)?;
        }
        if !self.diagnostics.is_empty() {
            write_file(&dir.join("diagnostics.csv"), &csv_bytes(&self.diagnostics)?)?;
        }
        if !self.convergence.is_empty() {
            write_file(&dir.join("convergence.csv"), &csv_bytes(&self.convergence)?)?;
        }
        for f in &self.files {
            let path = dir.join(&f.path);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            write_file(&path, &f.contents)?;
        }
        let timings: serde_json::Map<String, serde_json::Value> = self
            .timings
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::json!(v)))
            .collect();
        let mut t = serde_json::to_vec_pretty(&timings).expect("timings serialize");
        t.push(b'\n');
        write_file(&dir.join("timings.json"), &t)
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_and_monotonicity() {
        let rows = convergence_rows("s", "g", &[(Some(8), None, 1.0), (Some(16), None, 0.25), (Some(32), None, 0.5)]);
        assert_eq!(rows[0].order, None);
        assert_eq!(rows[1].order, Some(2.0));
        assert!(rows[1].monotone && !rows[2].monotone);
    }

    #[test]
    fn manifest_skips_bulk_data_and_writes_csvs() {
        let cfg = ExperimentConfig::new("distance");
        let mut r = ExperimentReport::new(&cfg);
        r.distances.push(DistanceRow { t: 0.0, d: 0.5 });
        r.add_file("sub/a.csv", b"x\n1\n".to_vec());
        r.timings.push(("total".into(), 0.1));
        let json: serde_json::Value = serde_json::from_slice(&r.manifest_json()).unwrap();
        assert_eq!(json["status"], "running");
        assert!(json.get("files").is_none() && json.get("timings").is_none());
        let dir = tempfile::tempdir().unwrap();
        r.write_all(dir.path()).unwrap();
        let d = std::fs::read_to_string(dir.path().join("distances.csv")).unwrap();
        assert_eq!(d, "t,d\n0.0,0.5\n");
        assert!(dir.path().join("sub/a.csv").exists());
        assert!(dir.path().join("timings.json").exists());
    }
}
