//! Refinement sweeps: time-step order of RK4, self-convergence of weak
//! residuals, the mono-kinetic check, the propagation ladder, and the
//! spatial accuracy of the hydro operator.

use crate::error::{Error, Result, SimResult};
use crate::geometry::TorusGeometry;
use crate::hydro::{HydroOptions, HydroSolver, HydroState};
use crate::initial::TrigPolynomial;
use crate::kernels::{KernelPair, KernelSpec};
use crate::kinetic::{simulate_kinetic, KineticOptions, ParticleEnsemble};
use crate::measures::{lift_monokinetic, SupportBounds, WeightedMeasure};
use crate::weak_form::{test_function_suite, verify_monokinetic_suite, weak_residual_suite, ResidualSeries, SupportBox};

use super::propagation::propagation_into;
use super::report::{convergence_rows, ConvergenceRow};
use super::{finish, hydro_run, initial_measure, ExperimentConfig, ExperimentReport};

/// Residuals whose every level stays below this are exact up to roundoff,
/// so their ratios carry no order information.
pub const ROUNDOFF_FLOOR: f64 = 1e-11;

pub const SWEEPS: [&str; 5] = ["rk4", "weak-residual", "monokinetic", "propagation", "manufactured"];

pub fn run_convergence(cfg: &ExperimentConfig) -> SimResult<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let outcome = cfg.validate().and_then(|_| convergence_into(cfg, &mut report));
    finish(report, outcome)
}

pub(crate) fn convergence_into(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    if let Some(bad) = cfg.convergence.sweeps.iter().find(|s| !SWEEPS.contains(&s.as_str())) {
        return Err(Error::UnknownStrategy {
            registry: "convergence sweep",
            name: bad.clone(),
            available: SWEEPS.join(", "),
        });
    }
    let wants = |s: &str| cfg.convergence.sweeps.iter().any(|x| x == s);
    if wants("rk4") {
        let rows = rk4_sweep(cfg)?;
        report.convergence.extend(rows);
    }
    if wants("weak-residual") {
        weak_residual_sweep(cfg, report)?;
    }
    if wants("monokinetic") {
        monokinetic_sweep(cfg, report)?;
    }
    if wants("propagation") {
        if cfg.resolution.ladder.len() < 3 {
            return Err(Error::Config("the propagation sweep needs a ladder of at least 3 resolutions".into()));
        }
        propagation_into(cfg, report)?;
    }
    if wants("manufactured") {
        let levels = cfg
            .convergence
            .manufactured_cells
            .iter()
            .map(|&m| Ok((Some(m), None, manufactured_error(&ManufacturedState::standard(cfg.geometry.period), m)?)))
            .collect::<Result<Vec<_>>>()?;
        report
            .convergence
            .extend(convergence_rows("manufactured", "max rate error", &levels));
    }
    let bad: Vec<String> = report
        .convergence
        .iter()
        .filter(|r| !r.monotone)
        .map(|r| format!("{}/{} level {}", r.sweep, r.label, r.level))
        .collect();
    if !bad.is_empty() {
        report.notes.push(format!("non-monotone error sequences: {}", bad.join(", ")));
    }
    Ok(())
}

fn dt_levels(dt0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| dt0 / 2f64.powi(k as i32)).collect()
}

/// Two particles with distinct velocities and temperatures.
pub fn two_particle_measure(geom: &TorusGeometry) -> Result<WeightedMeasure> {
    let d = geom.dim;
    let l = geom.period;
    let pad = |first: f64, rest: f64| -> Vec<f64> { (0..d).map(|k| if k == 0 { first } else { rest }).collect() };
    let mut x = pad(0.1 * l, 0.3 * l);
    x.extend(pad(0.6 * l, 0.45 * l));
    let mut v = pad(0.3, 0.1);
    v.extend(pad(-0.2, -0.15));
    WeightedMeasure::from_parts(d, x, v, vec![1.0, 1.5], vec![0.6, 0.4])
}

/// Richardson differences between successive halvings of `dt0`.
fn rk4_sweep(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    let model = cfg.kinetic_model()?;
    let mu = two_particle_measure(&cfg.geometry)?;
    let dts = dt_levels(cfg.convergence.rk4_dt0, cfg.convergence.halvings + 2);
    let finals = dts
        .iter()
        .map(|&dt| {
            let steps = (cfg.time.horizon / dt).round() as usize;
            let traj = simulate_kinetic(
                &ParticleEnsemble::new(mu.clone()),
                cfg.time.horizon,
                dt,
                steps,
                &model,
                &KineticOptions::default(),
            )?;
            Ok(traj.last().expect("final save").measure.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let levels: Vec<_> = finals
        .windows(2)
        .zip(&dts)
        .map(|(w, &dt)| (None, Some(dt), max_gap(&w[0], &w[1])))
        .collect();
    Ok(convergence_rows("rk4", "two-particle", &levels))
}

fn max_gap(a: &WeightedMeasure, b: &WeightedMeasure) -> f64 {
    let pairs = [
        (a.positions(), b.positions()),
        (a.velocities(), b.velocities()),
        (a.temperatures(), b.temperatures()),
    ];
    pairs
        .iter()
        .flat_map(|(p, q)| p.iter().zip(q.iter()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn covering_box(bounds: impl Iterator<Item = Result<SupportBounds>>, dim: usize) -> Result<SupportBox> {
    let mut b: Option<SupportBounds> = None;
    for s in bounds {
        let s = s?;
        b = Some(match b {
            Some(acc) => acc.union(&s),
            None => s,
        });
    }
    let b = b.ok_or_else(|| Error::Config("empty trajectory".into()))?;
    SupportBox::around(&b, dim, 0.1, 0.5)
}

/// Final residual of each informative member, or `None` when every level is
/// below the roundoff floor.
fn residual_rows(
    sweep: &str,
    per_level: &[(Option<usize>, Option<f64>, Vec<ResidualSeries>)],
    report: &mut ExperimentReport,
) {
    let members = per_level[0].2.len();
    for g in 0..members {
        let id = per_level[0].2[g].g_id.clone();
        let levels: Vec<_> = per_level
            .iter()
            .map(|(m, dt, s)| (*m, *dt, s[g].final_residual().abs()))
            .collect();
        if per_level.iter().any(|l| l.2[g].vacuous) {
            report.notes.push(format!("{sweep}: `{id}` never sees the support, skipped"));
        } else if levels.iter().all(|l| l.2 < ROUNDOFF_FLOOR) {
            report.notes.push(format!("{sweep}: `{id}` is exact to roundoff, skipped"));
        } else {
            report.convergence.extend(convergence_rows(sweep, &id, &levels));
        }
    }
}

/// Final weak residuals of a particle trajectory saved at every step, under
/// halving of `dt0`.
fn weak_residual_sweep(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let model = cfg.kinetic_model()?;
    let mu = initial_measure(cfg, cfg.convergence.particles)?;
    let mut trajs = Vec::new();
    for dt in dt_levels(cfg.convergence.dt0, cfg.convergence.halvings + 1) {
        let traj = simulate_kinetic(
            &ParticleEnsemble::new(mu.clone()),
            cfg.time.horizon,
            dt,
            1,
            &model,
            &cfg.kinetic.options,
        )?;
        trajs.push((dt, traj));
    }
    let bx = covering_box(
        trajs[0].1.ensembles.iter().map(|e| e.measure.support_bounds()),
        cfg.geometry.dim,
    )?;
    let suite = test_function_suite(&bx, &cfg.geometry)?;
    let per_level = trajs
        .iter()
        .map(|(dt, t)| Ok((None, Some(*dt), weak_residual_suite(t, &suite, &model)?)))
        .collect::<Result<Vec<_>>>()?;
    residual_rows("weak-residual", &per_level, report);
    Ok(())
}

/// Mono-kinetic residuals under simultaneous refinement of the grid (the
/// resolution ladder) and the time step (`dt0` scaled with the grid).
fn monokinetic_sweep(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let ladder = &cfg.resolution.ladder;
    if ladder.len() < 3 {
        return Err(Error::Config("the mono-kinetic sweep needs a ladder of at least 3 resolutions".into()));
    }
    let mut runs = Vec::new();
    for &m in ladder {
        let dt = cfg.convergence.dt0 * ladder[0] as f64 / m as f64;
        let (solver, traj) = hydro_run(cfg, m, dt, 1, &format!("monokinetic/m{m}"), report)?;
        runs.push((m, dt, solver, traj));
    }
    let bx = covering_box(
        runs[0]
            .3
            .states
            .iter()
            .map(|s| lift_monokinetic(s).and_then(|l| l.support_bounds())),
        cfg.geometry.dim,
    )?;
    let suite = test_function_suite(&bx, &cfg.geometry)?;
    let per_level = runs
        .iter()
        .map(|(m, dt, solver, traj)| Ok((Some(*m), Some(*dt), verify_monokinetic_suite(traj, &suite, solver)?)))
        .collect::<Result<Vec<_>>>()?;
    residual_rows("monokinetic", &per_level, report);
    Ok(())
}

/// A smooth hydro state with constant kernels, whose exact rates follow from
/// derivatives of trigonometric polynomials and three global integrals.
#[derive(Debug, Clone)]
pub struct ManufacturedState {
    pub period: f64,
    pub rho: TrigPolynomial,
    pub u: TrigPolynomial,
    pub e: TrigPolynomial,
    pub kappa_phi: f64,
    pub kappa_zeta: f64,
}

impl ManufacturedState {
    /// `e` close to zero somewhere, so `1/e` has slowly decaying modes.
    pub fn standard(period: f64) -> Self {
        Self {
            period,
            rho: TrigPolynomial::new(1.0, vec![0.2], vec![]),
            u: TrigPolynomial::new(0.1, vec![], vec![0.3]),
            e: TrigPolynomial::new(1.0, vec![], vec![0.9]),
            kappa_phi: 0.7,
            kappa_zeta: 1.3,
        }
    }

    /// Integral over the torus of `f(x)` by a fine midpoint rule, converged to
    /// roundoff for the analytic integrands used here.
    fn integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        const FINE: usize = 8192;
        let h = self.period / FINE as f64;
        (0..FINE).map(|j| f((j as f64 + 0.5) * h)).sum::<f64>() * h
    }

    /// `(rho_t, u_t, e_t)` at `x`.
    pub fn exact_rates(&self, x: f64) -> (f64, f64, f64) {
        let l = self.period;
        let (rho, u, e) = (|y| self.rho.eval(y, l), |y| self.u.eval(y, l), |y| self.e.eval(y, l));
        let i_rho = self.integral(rho);
        let i_rho_q = self.integral(|y| rho(y) * u(y) / e(y));
        let i_rho_e = self.integral(|y| rho(y) / e(y));
        let (r, v, th) = (rho(x), u(x), e(x));
        let (dr, dv, de) = (self.rho.derivative(x, l), self.u.derivative(x, l), self.e.derivative(x, l));
        let rho_t = -(dr * v + r * dv);
        let u_t = -v * dv + self.kappa_phi * (i_rho_q - v / th * i_rho);
        let e_t = -v * de + self.kappa_zeta * (i_rho / th - i_rho_e);
        (rho_t, u_t, e_t)
    }
}

/// Largest pointwise gap between the grid rates of the hydro solver on
/// `cells` cells and the exact rates.
pub fn manufactured_error(m: &ManufacturedState, cells: usize) -> Result<f64> {
    let geom = TorusGeometry::new(1, m.period)?;
    let kernels = KernelPair::from_specs(&KernelSpec::constant(m.kappa_phi), &KernelSpec::constant(m.kappa_zeta))?;
    let solver = HydroSolver::new(geom, cells, &kernels, HydroOptions::default())?;
    let h = m.period / cells as f64;
    let xs: Vec<f64> = (0..cells).map(|j| (j as f64 + 0.5) * h).collect();
    let eval = |p: &TrigPolynomial| xs.iter().map(|&x| p.eval(x, m.period)).collect::<Vec<_>>();
    let state = HydroState::new(geom, eval(&m.rho), eval(&m.u), eval(&m.e))?;
    let (rt, ut, et) = solver.primitive_rates(&state)?;
    let mut err: f64 = 0.0;
    for (j, &x) in xs.iter().enumerate() {
        let (a, b, c) = m.exact_rates(x);
        err = err.max((rt[j] - a).abs()).max((ut[j] - b).abs()).max((et[j] - c).abs());
    }
    Ok(err)
}
