//! Growth of the distance between a measure and a smooth perturbation of it,
//! and the coupled-characteristics ratio along the same pair.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, SimResult};
use crate::geometry::TorusGeometry;
use crate::kinetic::{coupled_characteristics, KineticTrajectory};
use crate::measures::{PhasePoint, WeightedMeasure};

use super::report::{csv_bytes, CharacteristicsSummary, DistanceRow, StabilityRun};
use super::{finish, initial_measure, kinetic_run, sup_of, DiagnosticRow, Distances, ExperimentConfig, ExperimentReport};

/// Smallest initial distance accepted as a genuine perturbation.
pub const DEGENERATE_DISTANCE: f64 = 1e-14;

/// `x + eps sin(2 pi x_k / L)`, `v + eps cos(2 pi x_k / L)` componentwise and
/// `theta + eps theta_m sin(4 pi x_1 / L)`, where `theta_m` is the smallest
/// temperature of `mu`. Weights are unchanged.
pub fn perturb(mu: &WeightedMeasure, eps: f64, geom: &TorusGeometry) -> Result<WeightedMeasure> {
    if !(eps.is_finite() && (0.0..1.0).contains(&eps)) {
        return Err(Error::Domain(format!("perturbation size must lie in [0, 1), got {eps}")));
    }
    let d = mu.dim();
    let l = geom.period;
    let theta_m = mu.temperatures().iter().copied().fold(f64::INFINITY, f64::min);
    let (mut x, mut v, mut theta) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..mu.len() {
        let xi = mu.x(i);
        for k in 0..d {
            let s = 2.0 * PI * xi[k] / l;
            x.push(xi[k] + eps * s.sin());
            v.push(mu.v(i)[k] + eps * s.cos());
        }
        theta.push(mu.theta(i) + eps * theta_m * (4.0 * PI * xi[0] / l).sin());
    }
    WeightedMeasure::from_parts(d, x, v, theta, mu.weights().to_vec())
}

pub fn run_stability(cfg: &ExperimentConfig) -> SimResult<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let outcome = cfg.validate().and_then(|_| stability_into(cfg, &mut report));
    finish(report, outcome)
}

struct Pair {
    mu: KineticTrajectory,
    nu: KineticTrajectory,
    distances: Vec<DistanceRow>,
}

fn evolve_pair(
    cfg: &ExperimentConfig,
    mu0: &WeightedMeasure,
    nu0: WeightedMeasure,
    dt: f64,
    save_every: usize,
    label: &str,
    distances: &Distances,
    report: &mut ExperimentReport,
) -> Result<Pair> {
    let mu = kinetic_run(cfg, mu0.clone(), dt, save_every, &format!("{label}/mu"), report)?;
    let nu = kinetic_run(cfg, nu0, dt, save_every, &format!("{label}/nu"), report)?;
    let pairs: Vec<_> = mu
        .ensembles
        .iter()
        .zip(&nu.ensembles)
        .map(|(a, b)| (a.t, &a.measure, &b.measure))
        .collect();
    let start = std::time::Instant::now();
    let rows = distances.series(&pairs, label, report)?;
    report.timings.push((format!("{label}/distance"), start.elapsed().as_secs_f64()));
    Ok(Pair {
        mu,
        nu,
        distances: rows,
    })
}

fn ratios(rows: &[DistanceRow]) -> Vec<DistanceRow> {
    let d0 = rows[0].d;
    rows.iter().map(|r| DistanceRow { t: r.t, d: r.d / d0 }).collect()
}

pub(crate) fn stability_into(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    if cfg.stability.epsilons.is_empty() {
        return Err(Error::Config("stability.epsilons is empty".into()));
    }
    let mu0 = initial_measure(cfg, cfg.resolution.particles)?;
    let distances = Distances::new(cfg)?;
    let (dt, every) = (cfg.time.dt, cfg.time.save_every);
    let mut first_pairs: Option<(f64, Pair, Option<Pair>)> = None;
    for &eps in &cfg.stability.epsilons {
        let label = format!("eps{eps:e}");
        let nu0 = perturb(&mu0, eps, &cfg.geometry)?;
        let (d0, recs) = distances.between(&mu0, &nu0, &label)?;
        report.subsamples.extend(recs);
        if d0 < DEGENERATE_DISTANCE {
            return Err(Error::Domain(format!(
                "degenerate perturbation: d(mu_0, nu_0) = {d0:e} < {DEGENERATE_DISTANCE:e} for eps = {eps}"
            )));
        }
        let pair = evolve_pair(cfg, &mu0, nu0.clone(), dt, every, &label, &distances, report)?;
        let series = ratios(&pair.distances);
        let (sup_ratio, sup_time) = sup_of(&series);
        report.add_file(format!("{label}/distances.csv"), csv_bytes(&pair.distances)?);
        report.add_file(format!("{label}/ratios.csv"), csv_bytes(&series)?);
        let mut run = StabilityRun {
            epsilon: eps,
            d0: pair.distances[0].d,
            sup_ratio,
            sup_time,
            ratios: series,
            halved_sup_ratio: None,
            halving_change: None,
        };
        let halved = if cfg.stability.dt_halving {
            let hl = format!("{label}/half-dt");
            let h = evolve_pair(cfg, &mu0, nu0, dt / 2.0, every * 2, &hl, &distances, report)?;
            let (s, _) = sup_of(&ratios(&h.distances));
            run.halved_sup_ratio = Some(s);
            run.halving_change = Some((s - sup_ratio).abs() / sup_ratio);
            Some(h)
        } else {
            None
        };
        report.stability.push(run);
        report.diagnostics.extend(DiagnosticRow::kinetic(&format!("{label}/mu"), &pair.mu, None));
        report.diagnostics.extend(DiagnosticRow::kinetic(&format!("{label}/nu"), &pair.nu, None));
        if first_pairs.is_none() {
            first_pairs = Some((eps, pair, halved));
        }
    }
    if cfg.stability.probes > 0 {
        let (eps, pair, halved) = first_pairs.expect("at least one epsilon");
        characteristics(cfg, eps, &pair, halved.as_ref(), report)?;
    }
    if let [a, b, ..] = report.stability.as_slice() {
        let spread = (a.sup_ratio / b.sup_ratio).max(b.sup_ratio / a.sup_ratio);
        report.notes.push(format!(
            "sup ratios for eps = {} and {} differ by a factor {spread:.3}",
            a.epsilon, b.epsilon
        ));
    }
    Ok(())
}

/// Starting points drawn uniformly from the torus times the velocity and
/// temperature range of both initial measures.
fn probes(cfg: &ExperimentConfig, pair: &Pair) -> Result<Vec<PhasePoint>> {
    let b0 = pair.mu.ensembles[0].measure.support_bounds()?;
    let b1 = pair.nu.ensembles[0].measure.support_bounds()?;
    let b = b0.union(&b1);
    let d = cfg.geometry.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.stability.probes)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..cfg.geometry.period)).collect();
            let v: Vec<f64> = (0..d)
                .map(|_| rng.random_range(-1.0..=1.0) * b.max_speed / (d as f64).sqrt())
                .collect();
            let theta = b.theta_min + rng.random_range(0.0..=1.0) * (b.theta_max - b.theta_min);
            PhasePoint::new(x, v, theta)
        })
        .collect()
}

fn max_over_probes(
    cfg: &ExperimentConfig,
    zs: &[PhasePoint],
    pair: &Pair,
    substeps: usize,
    rows: &mut Vec<ProbeRow>,
    tag: &str,
) -> Result<(f64, usize)> {
    let model = cfg.kinetic_model()?;
    let d: Vec<f64> = pair.distances.iter().map(|r| r.d).collect();
    let mut best = (0.0, 0);
    for (p, z) in zs.iter().enumerate() {
        let s = coupled_characteristics(z, &pair.mu, &pair.nu, &d, &model, substeps)?;
        for k in 0..s.t.len() {
            rows.push(ProbeRow {
                run: tag.to_owned(),
                probe: p,
                t: s.t[k],
                delta: s.delta[k],
                integral: s.integral[k],
                ratio: s.ratio[k],
            });
        }
        if let Some(r) = s.max_ratio() {
            if r > best.0 {
                best = (r, p);
            }
        }
    }
    Ok(best)
}

#[derive(serde::Serialize)]
struct ProbeRow {
    run: String,
    probe: usize,
    t: f64,
    delta: f64,
    integral: f64,
    ratio: Option<f64>,
}

fn characteristics(
    cfg: &ExperimentConfig,
    eps: f64,
    pair: &Pair,
    halved: Option<&Pair>,
    report: &mut ExperimentReport,
) -> Result<()> {
    let zs = probes(cfg, pair)?;
    let substeps = cfg.stability.substeps.max(1);
    let mut rows = Vec::new();
    let (max_ratio, worst_probe) = max_over_probes(cfg, &zs, pair, substeps, &mut rows, "dt")?;
    let mut summary = CharacteristicsSummary {
        epsilon: eps,
        probes: zs.len(),
        max_ratio,
        worst_probe,
        halved_max_ratio: None,
        halving_change: None,
    };
    if let Some(h) = halved {
        // same save grid, twice the steps: keep the substep length halved too
        let (m, _) = max_over_probes(cfg, &zs, h, 2 * substeps, &mut rows, "half-dt")?;
        summary.halved_max_ratio = Some(m);
        summary.halving_change = Some((m - max_ratio).abs() / max_ratio);
    }
    report.add_file("characteristics.csv", csv_bytes(&rows)?);
    report.characteristics = Some(summary);
    Ok(())
}
