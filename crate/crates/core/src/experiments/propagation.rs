//! Distance between the particle solution and the lifted hydro solution of
//! the same mono-kinetic data, over a resolution ladder.

use crate::error::{Error, Result, SimResult};
use crate::kinetic::grid_sample;
use crate::measures::{lift_monokinetic, WeightedMeasure};

use super::report::{convergence_rows, csv_bytes, PropagationLevel};
use super::{finish, hydro_run, kinetic_run, sup_of, DiagnosticRow, Distances, ExperimentConfig, ExperimentReport};

pub fn run_propagation(cfg: &ExperimentConfig) -> SimResult<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let outcome = cfg.validate().and_then(|_| propagation_into(cfg, &mut report));
    finish(report, outcome)
}

pub(crate) fn propagation_into(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let levels = propagation_ladder(cfg, report)?;
    if let Some(finest) = levels.last() {
        report.distances = finest.distances.clone();
        report.max_distance = Some(finest.max_distance);
    }
    let errors: Vec<_> = levels.iter().map(|l| (Some(l.resolution), None, l.max_distance)).collect();
    report.convergence.extend(convergence_rows("propagation", "max distance", &errors));
    Ok(())
}

/// One kinetic and one hydro run per rung with `N = M`, both sampled on the
/// same cell-centered grid.
pub(crate) fn propagation_ladder(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<Vec<PropagationLevel>> {
    if cfg.initial.particles.is_some() {
        return Err(Error::Config(
            "propagation starts both solvers from mono-kinetic data, not a particle file".into(),
        ));
    }
    let data = cfg.initial.mono_kinetic()?;
    let distances = Distances::new(cfg)?;
    let mut levels = Vec::new();
    for &n in &cfg.resolution.ladder {
        let label = format!("n{n}");
        let mu = grid_sample(&data, n, &cfg.geometry)?;
        let kin = kinetic_run(cfg, mu, cfg.time.dt, cfg.time.save_every, &label, report)?;
        report.diagnostics.extend(DiagnosticRow::kinetic(&label, &kin, None));
        let (_, hyd) = hydro_run(cfg, n, cfg.time.dt, cfg.time.save_every, &label, report)?;
        report.diagnostics.extend(DiagnosticRow::hydro(&label, &hyd));
        let lifts: Vec<WeightedMeasure> = hyd.states.iter().map(lift_monokinetic).collect::<Result<_>>()?;
        let pairs: Vec<_> = kin
            .ensembles
            .iter()
            .zip(&lifts)
            .map(|(e, l)| (e.t, &e.measure, l))
            .collect();
        let start = std::time::Instant::now();
        let rows = distances.series(&pairs, &label, report)?;
        report.timings.push((format!("{label}/distance"), start.elapsed().as_secs_f64()));
        report.add_file(format!("{label}/distances.csv"), csv_bytes(&rows)?);
        let (max_distance, argmax_t) = sup_of(&rows);
        let level = PropagationLevel {
            resolution: n,
            max_distance,
            argmax_t,
            distances: rows,
        };
        report.propagation.push(level.clone());
        levels.push(level);
    }
    Ok(levels)
}
