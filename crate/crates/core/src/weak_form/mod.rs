//! Residuals of the weak formulation
//!
//! ```text
//! <mu_t, g(t)> - <mu_0, g(0)>
//!     = int_0^t <mu_s, d_s g + v . grad_x g + F[mu_s] . grad_v g + G[mu_s] d_theta g> ds
//! ```
//!
//! evaluated on saved trajectories with the trapezoid rule in `s`.

mod test_function;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

pub use test_function::{test_function_suite, Jet, Monomial, SupportBox, TestFunction, TrigFactor};

use crate::error::{Error, Result};
use crate::hydro::{HydroSolver, HydroState, HydroTrajectory};
use crate::kinetic::{ensemble_rhs, KineticModel, KineticTrajectory};
use crate::measures::{lift_monokinetic, WeightedMeasure};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub g_id: String,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Residual of one test function at every save time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSeries {
    pub g_id: String,
    pub rows: Vec<ResidualRow>,
    /// No atom ever entered the support of `g`, so the zero residual is
    /// uninformative.
    pub vacuous: bool,
}

impl ResidualSeries {
    pub fn final_residual(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.residual)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max)
    }
}

/// Residual at a single time, with the vacuous-support flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub value: f64,
    pub vacuous: bool,
}

/// A saved measure with the velocity and temperature rates of its atoms.
struct Snapshot {
    t: f64,
    measure: WeightedMeasure,
    force: Vec<f64>,
    heat: Vec<f64>,
}

impl Snapshot {
    /// `(<mu, g(t)>, <mu, generator g>, any atom inside supp g)`.
    fn pairings(&self, g: &TestFunction) -> (f64, f64, bool) {
        let m = &self.measure;
        let d = m.dim();
        let (mut pair, mut gen, mut seen) = (0.0, 0.0, false);
        for i in 0..m.len() {
            let (x, v, th) = (m.x(i), m.v(i), m.theta(i));
            let w = m.weight(i);
            if w > 0.0 && g.in_support(v, th) {
                seen = true;
            }
            let j = g.jet(self.t, x, v, th);
            let f = &self.force[i * d..(i + 1) * d];
            let transport: f64 = (0..d).map(|k| v[k] * j.dx[k] + f[k] * j.dv[k]).sum();
            pair += w * j.g;
            gen += w * (j.dt + transport + self.heat[i] * j.dtheta);
        }
        (pair, gen, seen)
    }
}

fn series(snaps: &[Snapshot], g: &TestFunction) -> ResidualSeries {
    let vals: Vec<(f64, f64, bool)> = snaps.iter().map(|s| s.pairings(g)).collect();
    let mut rows = Vec::with_capacity(snaps.len());
    let mut integral = 0.0;
    for k in 0..snaps.len() {
        if k > 0 {
            integral += 0.5 * (snaps[k].t - snaps[k - 1].t) * (vals[k].1 + vals[k - 1].1);
        }
        let lhs = vals[k].0 - vals[0].0;
        rows.push(ResidualRow {
            g_id: g.id.clone(),
            t: snaps[k].t,
            lhs,
            rhs: integral,
            residual: lhs - integral,
        });
    }
    ResidualSeries {
        g_id: g.id.clone(),
        rows,
        vacuous: !vals.iter().any(|v| v.2),
    }
}

fn kinetic_snapshots(traj: &KineticTrajectory, model: &KineticModel) -> Result<Vec<Snapshot>> {
    if traj.ensembles.is_empty() {
        return Err(Error::Config("weak residual of an empty trajectory".into()));
    }
    traj.ensembles
        .par_iter()
        .map(|e| {
            let r = ensemble_rhs(e, model)?;
            Ok(Snapshot {
                t: e.t,
                measure: e.measure.clone(),
                force: r.dv,
                heat: r.dtheta,
            })
        })
        .collect()
}

/// `F` and `G` of a mono-kinetic measure at its own atoms:
/// `F_j = (phi * (rho u / e))_j - (u_j / e_j) (phi * rho)_j`,
/// `G_j = (zeta * rho)_j / e_j - (zeta * (rho / e))_j`.
pub fn monokinetic_forces(state: &HydroState, solver: &HydroSolver) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some(j) = state.e.iter().position(|&e| !(e > 0.0)) {
        return Err(Error::State(format!("e = {} <= 0 in cell {j}", state.e[j])));
    }
    let q: Vec<f64> = state.u.iter().zip(&state.e).map(|(u, e)| u / e).collect();
    let rho_q: Vec<f64> = state.rho.iter().zip(&q).map(|(r, q)| r * q).collect();
    let rho_over_e: Vec<f64> = state.rho.iter().zip(&state.e).map(|(r, e)| r / e).collect();
    let (a, rp) = (solver.convolve_phi(&rho_q), solver.convolve_phi(&state.rho));
    let (rz, b) = (solver.convolve_zeta(&state.rho), solver.convolve_zeta(&rho_over_e));
    let n = state.cells();
    Ok((
        (0..n).map(|j| a[j] - q[j] * rp[j]).collect(),
        (0..n).map(|j| rz[j] / state.e[j] - b[j]).collect(),
    ))
}

fn hydro_snapshots(traj: &HydroTrajectory, solver: &HydroSolver) -> Result<Vec<Snapshot>> {
    if traj.states.is_empty() {
        return Err(Error::Config("weak residual of an empty trajectory".into()));
    }
    traj.states
        .iter()
        .map(|s| {
            let (force, heat) = monokinetic_forces(s, solver)?;
            Ok(Snapshot {
                t: s.t,
                measure: lift_monokinetic(s)?,
                force,
                heat,
            })
        })
        .collect()
}

fn at_time(series: &ResidualSeries, t: f64) -> Result<Residual> {
    let row = series
        .rows
        .iter()
        .find(|r| (r.t - t).abs() <= 1e-12 * t.abs().max(1.0))
        .ok_or_else(|| Error::Config(format!("t = {t} is not a save time of the trajectory")))?;
    Ok(Residual {
        value: row.residual,
        vacuous: series.vacuous,
    })
}

/// Residual series of every test function on a particle trajectory.
pub fn weak_residual_suite(
    traj: &KineticTrajectory,
    suite: &[TestFunction],
    model: &KineticModel,
) -> Result<Vec<ResidualSeries>> {
    let snaps = kinetic_snapshots(traj, model)?;
    Ok(suite.par_iter().map(|g| series(&snaps, g)).collect())
}

/// `LHS - RHS` at save time `t` for a particle trajectory.
pub fn weak_residual(traj: &KineticTrajectory, g: &TestFunction, t: f64, model: &KineticModel) -> Result<Residual> {
    let snaps = kinetic_snapshots(traj, model)?;
    at_time(&series(&snaps, g), t)
}

/// Residual series of every test function on the mono-kinetic lift of a
/// hydro trajectory.
pub fn verify_monokinetic_suite(
    traj: &HydroTrajectory,
    suite: &[TestFunction],
    solver: &HydroSolver,
) -> Result<Vec<ResidualSeries>> {
    let snaps = hydro_snapshots(traj, solver)?;
    Ok(suite.par_iter().map(|g| series(&snaps, g)).collect())
}

/// `LHS - RHS` at the final save time for the lift of a hydro trajectory.
pub fn verify_monokinetic(traj: &HydroTrajectory, g: &TestFunction, solver: &HydroSolver) -> Result<Residual> {
    let snaps = hydro_snapshots(traj, solver)?;
    let s = series(&snaps, g);
    let t = s.rows.last().map_or(0.0, |r| r.t);
    at_time(&s, t)
}

/// CSV with header `g_id,t,lhs,rhs,residual`.
pub fn write_residual_csv(path: &Path, series: &[ResidualSeries]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    for s in series {
        for r in &s.rows {
            w.serialize(r).map_err(|e| Error::parse(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
