//! Experiment orchestration: configuration, the registry of runnable
//! experiments, and report persistence.

mod config;
mod convergence;
mod propagation;
mod report;
mod simulate;
mod stability;

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Aborted, Error, Result, SimResult};
use crate::geometry::TorusGeometry;
use crate::hydro::{HydroSolver, HydroState, HydroTrajectory};
use crate::kinetic::{grid_sample, iid_sample, simulate_kinetic, KineticTrajectory, ParticleEnsemble};
use crate::measures::{farthest_point_subsample, MinCostFlowSolver, SolverRegistry, WeightedMeasure};

pub use config::{
    ConvergenceConfig, DistanceConfig, ExperimentConfig, InitialConfig, KernelsConfig, KineticConfig,
    ResolutionConfig, Sampling, StabilityConfig, TimeConfig,
};
pub use convergence::{manufactured_error, run_convergence, ManufacturedState};
pub use propagation::run_propagation;
pub use report::{
    convergence_rows, csv_bytes, CharacteristicsSummary, Check, ConvergenceRow, DiagnosticRow, DistanceRow,
    ExperimentReport, OutputFile, PropagationLevel, Status, StabilityRun, SubsampleRecord, VERSION,
};
pub use simulate::{run_distance, run_simulate_hydro, run_simulate_kinetic};
pub use stability::{perturb, run_stability};

/// A runnable experiment kind.
pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;

    /// Fill `report`; on error the report keeps whatever was computed.
    fn execute(&self, cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()>;
}

struct FnExperiment {
    name: &'static str,
    run: fn(&ExperimentConfig, &mut ExperimentReport) -> Result<()>,
}

impl Experiment for FnExperiment {
    fn name(&self) -> &'static str {
        self.name
    }

    fn execute(&self, cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
        (self.run)(cfg, report)
    }
}

pub struct ExperimentRegistry {
    entries: Vec<Box<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        let builtin: [(&'static str, fn(&ExperimentConfig, &mut ExperimentReport) -> Result<()>); 6] = [
            ("simulate-kinetic", simulate::simulate_kinetic_into),
            ("simulate-hydro", simulate::simulate_hydro_into),
            ("distance", simulate::distance_into),
            ("propagation", propagation::propagation_into),
            ("stability", stability::stability_into),
            ("convergence", convergence::convergence_into),
        ];
        for (name, run) in builtin {
            reg.register(FnExperiment { name, run });
        }
        reg
    }

    pub fn register<E: Experiment + 'static>(&mut self, e: E) {
        self.entries.retain(|x| x.name() != e.name());
        self.entries.push(Box::new(e));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Experiment> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                registry: "experiment",
                name: name.to_owned(),
                available: self.names().join(", "),
            })
    }
}

/// Close out a report: `Ok` with status `ok`, or the partial report with the
/// error recorded.
pub(crate) fn finish(mut report: ExperimentReport, outcome: Result<()>) -> SimResult<ExperimentReport> {
    match outcome {
        Ok(()) => {
            report.status = Status::Ok;
            Ok(report)
        }
        Err(error) => {
            report.status = if error.is_solver_abort() {
                Status::Aborted
            } else {
                Status::Failed
            };
            report.error = Some(error.to_string());
            Err(Box::new(Aborted { partial: report, error }))
        }
    }
}

/// Validate and run `cfg.experiment` without touching the filesystem.
pub fn run_experiment(cfg: &ExperimentConfig) -> SimResult<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let outcome = execute_timed(cfg, &mut report);
    finish(report, outcome)
}

fn execute_timed(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    cfg.validate()?;
    let registry = ExperimentRegistry::builtin();
    let exp = registry.get(&cfg.experiment)?;
    let start = std::time::Instant::now();
    let outcome = exp.execute(cfg, report);
    report.timings.push(("total".into(), start.elapsed().as_secs_f64()));
    outcome
}

/// Run `cfg.experiment`, writing `manifest.json` to `dir` before any solver
/// starts and the full output set afterwards, including on failure.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path) -> SimResult<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    if let Err(e) = report.write_manifest(dir) {
        return finish(report, Err(e));
    }
    let outcome = execute_timed(cfg, &mut report);
    let result = finish(report, outcome);
    let written = match &result {
        Ok(r) => r.write_all(dir),
        Err(a) => a.partial.write_all(dir),
    };
    match (result, written) {
        (r, Ok(())) => r,
        (Ok(r), Err(e)) => finish(r, Err(e)),
        (Err(a), Err(_)) => Err(a),
    }
}

/// Particle measure of a run: the configured CSV, or a sample of the
/// mono-kinetic data with `n` atoms.
pub(crate) fn initial_measure(cfg: &ExperimentConfig, n: usize) -> Result<WeightedMeasure> {
    if let Some(path) = &cfg.initial.particles {
        let mu = WeightedMeasure::read_csv(path)?;
        if mu.dim() != cfg.geometry.dim {
            return Err(Error::Config(format!(
                "{}: measure of dimension {} on a {}-torus",
                path.display(),
                mu.dim(),
                cfg.geometry.dim
            )));
        }
        return Ok(mu);
    }
    let data = cfg.initial.mono_kinetic()?;
    match cfg.initial.sampling {
        Sampling::Grid => grid_sample(&data, n, &cfg.geometry),
        Sampling::Iid => iid_sample(&data, n, &cfg.geometry, cfg.seed),
    }
}

/// Kinetic march that records the diagnostics of a partial trajectory
/// before handing back the abort.
pub(crate) fn kinetic_run(
    cfg: &ExperimentConfig,
    mu: WeightedMeasure,
    dt: f64,
    save_every: usize,
    label: &str,
    report: &mut ExperimentReport,
) -> Result<KineticTrajectory> {
    let model = cfg.kinetic_model()?;
    let start = std::time::Instant::now();
    let res = simulate_kinetic(
        &ParticleEnsemble::new(mu),
        cfg.time.horizon,
        dt,
        save_every,
        &model,
        &cfg.kinetic.options,
    );
    report.timings.push((format!("{label}/kinetic"), start.elapsed().as_secs_f64()));
    res.map_err(|a| {
        report.diagnostics.extend(DiagnosticRow::kinetic(label, &a.partial, None));
        a.error
    })
}

pub(crate) fn hydro_run(
    cfg: &ExperimentConfig,
    cells: usize,
    dt: f64,
    save_every: usize,
    label: &str,
    report: &mut ExperimentReport,
) -> Result<(HydroSolver, HydroTrajectory)> {
    let data = cfg.initial.mono_kinetic()?;
    let solver = HydroSolver::new(cfg.geometry, cells, &cfg.kernel_pair()?, cfg.hydro.clone())?;
    let initial = HydroState::from_initial(&data, cells, cfg.geometry)?;
    let start = std::time::Instant::now();
    let res = solver.simulate(&initial, cfg.time.horizon, dt, save_every);
    report.timings.push((format!("{label}/hydro"), start.elapsed().as_secs_f64()));
    match res {
        Ok(traj) => Ok((solver, traj)),
        Err(a) => {
            report.diagnostics.extend(DiagnosticRow::hydro(label, &a.partial));
            Err(a.error)
        }
    }
}

/// Bounded-Lipschitz distances with the configured backend, subsampling
/// oversized supports when allowed.
pub(crate) struct Distances {
    registry: SolverRegistry,
    solver: String,
    subsample: bool,
    geom: TorusGeometry,
}

impl Distances {
    pub(crate) fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let mut registry = SolverRegistry::builtin();
        registry.register(MinCostFlowSolver::with_capacity(cfg.distance.capacity));
        registry.get(&cfg.distance.solver)?;
        Ok(Self {
            registry,
            solver: cfg.distance.solver.clone(),
            subsample: cfg.distance.subsample,
            geom: cfg.geometry,
        })
    }

    pub(crate) fn between(
        &self,
        mu: &WeightedMeasure,
        nu: &WeightedMeasure,
        context: &str,
    ) -> Result<(f64, Vec<SubsampleRecord>)> {
        let solver = self.registry.get(&self.solver)?;
        let cap = solver.capacity();
        if mu.len() + nu.len() <= cap {
            return Ok((solver.distance(mu, nu, &self.geom)?, Vec::new()));
        }
        if !self.subsample || cap < 2 {
            return Err(Error::Capacity {
                size: mu.len() + nu.len(),
                capacity: cap,
            });
        }
        let (a, sa) = farthest_point_subsample(mu, cap / 2, &self.geom)?;
        let (b, sb) = farthest_point_subsample(nu, cap - cap / 2, &self.geom)?;
        let records = [sa, sb]
            .into_iter()
            .filter(|s| s.subsample_size < s.original_size)
            .map(|subsample| SubsampleRecord {
                context: context.to_owned(),
                subsample,
            })
            .collect();
        Ok((solver.distance(&a, &b, &self.geom)?, records))
    }

    /// Distances between matching saves of two trajectories of measures.
    pub(crate) fn series(
        &self,
        pairs: &[(f64, &WeightedMeasure, &WeightedMeasure)],
        context: &str,
        report: &mut ExperimentReport,
    ) -> Result<Vec<DistanceRow>> {
        let solved: Vec<(f64, f64, Vec<SubsampleRecord>)> = pairs
            .par_iter()
            .map(|&(t, a, b)| {
                let (d, recs) = self.between(a, b, &format!("{context} t={t}"))?;
                Ok((t, d, recs))
            })
            .collect::<Result<_>>()?;
        let mut rows = Vec::with_capacity(solved.len());
        for (t, d, recs) in solved {
            report.subsamples.extend(recs);
            rows.push(DistanceRow { t, d });
        }
        Ok(rows)
    }
}

/// `(max, time of max)` of a series; ties keep the earliest time.
pub(crate) fn sup_of(rows: &[DistanceRow]) -> (f64, f64) {
    rows.iter()
        .fold((f64::NEG_INFINITY, 0.0), |acc, r| if r.d > acc.0 { (r.d, r.t) } else { acc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lists_every_experiment() {
        let reg = ExperimentRegistry::builtin();
        assert_eq!(
            reg.names(),
            ["simulate-kinetic", "simulate-hydro", "distance", "propagation", "stability", "convergence"]
        );
        assert!(matches!(reg.get("plot"), Err(Error::UnknownStrategy { .. })));
    }

    #[test]
    fn invalid_config_fails_with_partial_report() {
        let mut cfg = ExperimentConfig::new("propagation");
        cfg.time.dt = 0.3;
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.partial.status, Status::Failed);
        assert!(!err.error.is_solver_abort());
    }

    #[test]
    fn sup_keeps_first_maximum() {
        let rows = [
            DistanceRow { t: 0.0, d: 1.0 },
            DistanceRow { t: 0.5, d: 2.0 },
            DistanceRow { t: 1.0, d: 2.0 },
        ];
        assert_eq!(sup_of(&rows), (2.0, 0.5));
    }
}
