//! Single-solver runs and the standalone distance computation.

use crate::error::{Error, Result, SimResult};
use crate::kinetic::VelocityEnvelope;
use crate::measures::WeightedMeasure;

use super::{finish, hydro_run, initial_measure, kinetic_run, DiagnosticRow, Distances, ExperimentConfig, ExperimentReport};
use super::report::{Check, DistanceRow};

/// Minimum temperature tolerance, shared with the hydro energy check.
pub(crate) const FLOOR_TOL: f64 = 1e-8;

pub fn run_simulate_kinetic(cfg: &ExperimentConfig) -> SimResult<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let outcome = cfg.validate().and_then(|_| simulate_kinetic_into(cfg, &mut report));
    finish(report, outcome)
}

pub(crate) fn simulate_kinetic_into(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let mu = initial_measure(cfg, cfg.resolution.particles)?;
    let traj = kinetic_run(cfg, mu, cfg.time.dt, cfg.time.save_every, "kinetic", report)?;
    let kernels = cfg.kernel_pair()?;
    let env = VelocityEnvelope::from_trajectory(&traj, &kernels);
    report.diagnostics.extend(DiagnosticRow::kinetic("kinetic", &traj, env.as_ref()));
    let first = &traj.diagnostics[0];
    let drift = traj
        .diagnostics
        .iter()
        .map(|d| (d.mass - first.mass).abs())
        .fold(0.0, f64::max);
    report.checks.push(Check::at_most("mass drift", drift, 0.0));
    if cfg.kinetic.thermal {
        let min_theta = traj.diagnostics.iter().map(|d| d.min_theta).fold(f64::INFINITY, f64::min);
        report
            .checks
            .push(Check::at_least("min temperature", min_theta, first.min_theta - FLOOR_TOL));
    }
    if let Some(env) = env {
        let violations = env.violations(&traj).len();
        report
            .checks
            .push(Check::at_most("velocity envelope violations", violations as f64, 0.0));
    }
    for (k, e) in traj.ensembles.iter().enumerate() {
        let mut buf = Vec::new();
        e.measure
            .write_csv_to(&mut buf)
            .map_err(|err| Error::io("measure csv", err))?;
        report.add_file(format!("measures/save{k:05}.csv"), buf);
    }
    Ok(())
}

pub fn run_simulate_hydro(cfg: &ExperimentConfig) -> SimResult<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let outcome = cfg.validate().and_then(|_| simulate_hydro_into(cfg, &mut report));
    finish(report, outcome)
}

pub(crate) fn simulate_hydro_into(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let (_, traj) = hydro_run(cfg, cfg.resolution.cells, cfg.time.dt, cfg.time.save_every, "hydro", report)?;
    report.diagnostics.extend(DiagnosticRow::hydro("hydro", &traj));
    let first = &traj.diagnostics[0];
    let drift = traj
        .diagnostics
        .iter()
        .map(|d| ((d.mass - first.mass) / first.mass).abs())
        .fold(0.0, f64::max);
    report.checks.push(Check::at_most("relative mass drift", drift, 1e-12));
    let min_e = traj.diagnostics.iter().map(|d| d.min_e).fold(f64::INFINITY, f64::min);
    report
        .checks
        .push(Check::at_least("min internal energy", min_e, first.min_e - FLOOR_TOL));
    for (k, s) in traj.states.iter().enumerate() {
        let mut buf = Vec::new();
        s.write_csv_to(&mut buf).map_err(|err| Error::io("state csv", err))?;
        report.add_file(format!("states/save{k:05}.csv"), buf);
    }
    Ok(())
}

pub fn run_distance(cfg: &ExperimentConfig) -> SimResult<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let outcome = cfg.validate().and_then(|_| distance_into(cfg, &mut report));
    finish(report, outcome)
}

pub(crate) fn distance_into(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let (Some(a), Some(b)) = (&cfg.distance.a, &cfg.distance.b) else {
        return Err(Error::Config("the distance experiment needs `distance.a` and `distance.b`".into()));
    };
    let (mu, nu) = (WeightedMeasure::read_csv(a)?, WeightedMeasure::read_csv(b)?);
    for (m, p) in [(&mu, a), (&nu, b)] {
        if m.dim() != cfg.geometry.dim {
            return Err(Error::Config(format!(
                "{}: measure of dimension {} on a {}-torus",
                p.display(),
                m.dim(),
                cfg.geometry.dim
            )));
        }
    }
    let (d, recs) = Distances::new(cfg)?.between(&mu, &nu, "distance")?;
    report.subsamples.extend(recs);
    report.distances.push(DistanceRow { t: 0.0, d });
    report.max_distance = Some(d);
    Ok(())
}
