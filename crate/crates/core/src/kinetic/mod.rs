//! Particle solver for the kinetic equation: atoms move along the
//! characteristic system
//!
//! ```text
//! dx/dt = v,   dv/dt = F[mu_t](x, v, theta),   dtheta/dt = G[mu_t](x, theta)
//! F = a - (v / theta) rho_phi,   G = rho_zeta / theta - b
//! ```
//!
//! with the mean-field functionals `a, b, rho_phi, rho_zeta` taken over the
//! ensemble itself. Weights never change.

mod bounds;
mod characteristics;
mod sampling;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bounds::{
    functional_bounds, functional_stability_constants, velocity_envelope, FunctionalBounds,
    StabilityConstants, VelocityEnvelope,
};
pub use characteristics::{coupled_characteristics, CoupledSeries};
pub use sampling::{grid_sample, iid_sample};

use crate::error::{Aborted, Error, Result, SimResult};
use crate::geometry::TorusGeometry;
use crate::kernels::KernelPair;
use crate::measures::{PhasePoint, WeightedMeasure};

/// Geometry and kernels of the dynamics. With `thermal = false` temperatures
/// are frozen, which recovers the classical Cucker-Smale model when all
/// `theta = 1`.
#[derive(Debug, Clone)]
pub struct KineticModel {
    pub geom: TorusGeometry,
    pub kernels: KernelPair,
    pub thermal: bool,
}

impl KineticModel {
    pub fn new(geom: TorusGeometry, kernels: KernelPair) -> Self {
        Self {
            geom,
            kernels,
            thermal: true,
        }
    }

    pub fn classical(geom: TorusGeometry, kernels: KernelPair) -> Self {
        Self {
            geom,
            kernels,
            thermal: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub measure: WeightedMeasure,
    pub t: f64,
}

impl ParticleEnsemble {
    pub fn new(measure: WeightedMeasure) -> Self {
        Self { measure, t: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn diagnostics(&self) -> KineticDiagnostics {
        let m = &self.measure;
        let d = m.dim();
        let mut momentum = vec![0.0; d];
        for i in 0..m.len() {
            for (k, p) in momentum.iter_mut().enumerate() {
                *p += m.weight(i) * m.v(i)[k];
            }
        }
        let bounds = m.support_bounds().ok();
        KineticDiagnostics {
            t: self.t,
            mass: m.total_mass(),
            momentum,
            thermal: m.integrate(|_, _, th| th),
            min_theta: bounds.map_or(f64::NAN, |b| b.theta_min),
            max_speed: bounds.map_or(0.0, |b| b.max_speed),
        }
    }
}

/// Invariant diagnostics recorded at each save time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KineticDiagnostics {
    pub t: f64,
    pub mass: f64,
    /// `sum_i w_i v_i`
    pub momentum: Vec<f64>,
    /// `sum_i w_i theta_i`
    pub thermal: f64,
    pub min_theta: f64,
    pub max_speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldFunctionals {
    pub a: Vec<f64>,
    pub b: f64,
    pub rho_phi: f64,
    pub rho_zeta: f64,
}

impl MeanFieldFunctionals {
    pub fn zero(dim: usize) -> Self {
        Self {
            a: vec![0.0; dim],
            b: 0.0,
            rho_phi: 0.0,
            rho_zeta: 0.0,
        }
    }

    /// `(1 - s) self + s other`.
    pub fn lerp(&self, other: &Self, s: f64) -> Self {
        let mix = |p: f64, q: f64| (1.0 - s) * p + s * q;
        Self {
            a: self.a.iter().zip(&other.a).map(|(&p, &q)| mix(p, q)).collect(),
            b: mix(self.b, other.b),
            rho_phi: mix(self.rho_phi, other.rho_phi),
            rho_zeta: mix(self.rho_zeta, other.rho_zeta),
        }
    }
}

/// Per-source factors shared by every query point.
struct Sources<'a> {
    dim: usize,
    x: &'a [f64],
    w: &'a [f64],
    /// `w_j v_j / theta_j`
    p: Vec<f64>,
    /// `w_j / theta_j`
    q: Vec<f64>,
}

impl<'a> Sources<'a> {
    fn new(mu: &'a WeightedMeasure) -> Result<Self> {
        let theta = mu.temperatures();
        if let Some(j) = theta.iter().position(|&t| !(t > 0.0)) {
            return Err(Error::State(format!(
                "source atom {j} has non-positive temperature {}",
                theta[j]
            )));
        }
        let dim = mu.dim();
        let q: Vec<f64> = mu.weights().iter().zip(theta).map(|(w, t)| w / t).collect();
        let p = mu
            .velocities()
            .iter()
            .enumerate()
            .map(|(k, v)| v * q[k / dim])
            .collect();
        Ok(Self {
            dim,
            x: mu.positions(),
            w: mu.weights(),
            p,
            q,
        })
    }

    #[inline]
    fn eval(&self, model: &KineticModel, x: &[f64]) -> ([f64; 2], f64, f64, f64) {
        let (phi, zeta) = (model.kernels.phi.as_ref(), model.kernels.zeta.as_ref());
        let d = self.dim;
        let mut a = [0.0; 2];
        let (mut b, mut rp, mut rz) = (0.0, 0.0, 0.0);
        for j in 0..self.w.len() {
            let r = model.geom.distance_unchecked(&self.x[j * d..(j + 1) * d], x);
            let f = phi.profile(r);
            for k in 0..d {
                a[k] += f * self.p[j * d + k];
            }
            rp += f * self.w[j];
            if model.thermal {
                let z = zeta.profile(r);
                b += z * self.q[j];
                rz += z * self.w[j];
            }
        }
        (a, b, rp, rz)
    }
}

/// Mean-field functionals of `mu` at the position `x`.
pub fn functionals_at(x: &[f64], mu: &WeightedMeasure, model: &KineticModel) -> Result<MeanFieldFunctionals> {
    if x.len() != mu.dim() || x.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain(format!("query point must be a finite {}-vector", mu.dim())));
    }
    let sources = Sources::new(mu)?;
    let (a, b, rho_phi, rho_zeta) = sources.eval(model, x);
    Ok(MeanFieldFunctionals {
        a: a[..mu.dim()].to_vec(),
        b,
        rho_phi,
        rho_zeta,
    })
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 {
        Ok(())
    } else {
        Err(Error::State(format!("query temperature {theta} is not positive")))
    }
}

/// `a - (v / theta) rho_phi`.
#[allow(non_snake_case)]
pub fn force_F(z: &PhasePoint, fns: &MeanFieldFunctionals) -> Result<Vec<f64>> {
    check_theta(z.theta)?;
    Ok(fns
        .a
        .iter()
        .zip(&z.v)
        .map(|(a, v)| a - v / z.theta * fns.rho_phi)
        .collect())
}

/// `rho_zeta / theta - b`.
#[allow(non_snake_case)]
pub fn force_G(z: &PhasePoint, fns: &MeanFieldFunctionals) -> Result<f64> {
    check_theta(z.theta)?;
    Ok(fns.rho_zeta / z.theta - fns.b)
}

/// Time derivatives of all particle coordinates, flattened like the measure.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRates {
    pub dx: Vec<f64>,
    pub dv: Vec<f64>,
    pub dtheta: Vec<f64>,
}

pub fn ensemble_rhs(ens: &ParticleEnsemble, model: &KineticModel) -> Result<EnsembleRates> {
    measure_rhs(&ens.measure, model)
}

fn measure_rhs(m: &WeightedMeasure, model: &KineticModel) -> Result<EnsembleRates> {
    let theta = m.temperatures();
    if let Some(j) = theta.iter().position(|&t| !(t > 0.0)) {
        return Err(Error::State(format!(
            "atom {j} has non-positive temperature {}",
            theta[j]
        )));
    }
    let d = m.dim();
    let n = m.len();
    let (phi, zeta) = (model.kernels.phi.as_ref(), model.kernels.zeta.as_ref());
    let x = m.positions();
    let w = m.weights();
    let inv: Vec<f64> = theta.iter().map(|t| 1.0 / t).collect();
    let ratio: Vec<f64> = m
        .velocities()
        .iter()
        .enumerate()
        .map(|(k, v)| v / theta[k / d])
        .collect();
    // pairwise differences make the i = j term vanish exactly
    let per_particle: Vec<([f64; 2], f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &x[i * d..(i + 1) * d];
            let mut dv = [0.0; 2];
            let mut dth = 0.0;
            for j in 0..n {
                let r = model.geom.distance_unchecked(&x[j * d..(j + 1) * d], xi);
                let f = phi.profile(r) * w[j];
                for k in 0..d {
                    dv[k] += f * (ratio[j * d + k] - ratio[i * d + k]);
                }
                if model.thermal {
                    dth += zeta.profile(r) * w[j] * (inv[i] - inv[j]);
                }
            }
            (dv, dth)
        })
        .collect();
    let mut dv = Vec::with_capacity(n * d);
    let mut dtheta = Vec::with_capacity(n);
    for (v, th) in per_particle {
        dv.extend_from_slice(&v[..d]);
        dtheta.push(th);
    }
    Ok(EnsembleRates {
        dx: m.velocities().to_vec(),
        dv,
        dtheta,
    })
}

fn stage(base: &WeightedMeasure, h: f64, k: &EnsembleRates) -> WeightedMeasure {
    let mut out = base.clone();
    let (x, v, th) = out.parts_mut();
    x.iter_mut().zip(&k.dx).for_each(|(a, b)| *a += h * b);
    v.iter_mut().zip(&k.dv).for_each(|(a, b)| *a += h * b);
    th.iter_mut().zip(&k.dtheta).for_each(|(a, b)| *a += h * b);
    out
}

fn guard_check(m: &WeightedMeasure, time: f64, guard: f64) -> Result<()> {
    match m.temperatures().iter().position(|&t| !(t > guard)) {
        Some(index) => Err(Error::TemperatureGuard {
            index,
            time,
            theta: m.theta(index),
            guard,
        }),
        None => Ok(()),
    }
}

/// One classical RK4 step. Any stage temperature at or below `theta_guard`
/// fails the step.
pub fn step_rk4(
    ens: &ParticleEnsemble,
    dt: f64,
    model: &KineticModel,
    theta_guard: f64,
) -> Result<ParticleEnsemble> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let m0 = &ens.measure;
    let t = ens.t;
    let k1 = measure_rhs(m0, model)?;
    let s2 = stage(m0, dt / 2.0, &k1);
    guard_check(&s2, t + dt / 2.0, theta_guard)?;
    let k2 = measure_rhs(&s2, model)?;
    let s3 = stage(m0, dt / 2.0, &k2);
    guard_check(&s3, t + dt / 2.0, theta_guard)?;
    let k3 = measure_rhs(&s3, model)?;
    let s4 = stage(m0, dt, &k3);
    guard_check(&s4, t + dt, theta_guard)?;
    let k4 = measure_rhs(&s4, model)?;

    let mut next = m0.clone();
    let (x, v, th) = next.parts_mut();
    let combine = |dst: &mut [f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| {
        for i in 0..dst.len() {
            dst[i] += dt * ((a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]) / 6.0);
        }
    };
    combine(x, &k1.dx, &k2.dx, &k3.dx, &k4.dx);
    combine(v, &k1.dv, &k2.dv, &k3.dv, &k4.dv);
    combine(th, &k1.dtheta, &k2.dtheta, &k3.dtheta, &k4.dtheta);
    guard_check(&next, t + dt, theta_guard)?;
    debug_assert_eq!(next.weights(), m0.weights());
    Ok(ParticleEnsemble {
        measure: next,
        t: t + dt,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KineticOptions {
    /// Temperature guard; defaults to half the initial minimum temperature.
    pub theta_guard: Option<f64>,
    /// Largest accepted time step.
    pub dt_max: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct KineticTrajectory {
    pub ensembles: Vec<ParticleEnsemble>,
    pub diagnostics: Vec<KineticDiagnostics>,
}

impl KineticTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.ensembles.iter().map(|e| e.t).collect()
    }

    pub fn last(&self) -> Option<&ParticleEnsemble> {
        self.ensembles.last()
    }
}

/// Fixed-step RK4 march to `horizon`, saving every `save_every` steps.
pub fn simulate_kinetic(
    initial: &ParticleEnsemble,
    horizon: f64,
    dt: f64,
    save_every: usize,
    model: &KineticModel,
    options: &KineticOptions,
) -> SimResult<KineticTrajectory> {
    let mut traj = KineticTrajectory::default();
    let abort = |traj: KineticTrajectory, error: Error| Box::new(Aborted { partial: traj, error });
    let steps = match crate::hydro::step_count(horizon, dt, save_every) {
        Ok(s) => s,
        Err(e) => return Err(abort(traj, e)),
    };
    if let Some(dt_max) = options.dt_max {
        if dt > dt_max {
            return Err(abort(traj, Error::Config(format!("dt = {dt} exceeds dt_max = {dt_max}"))));
        }
    }
    let setup = initial
        .measure
        .validate()
        .and_then(|_| model.geom.validate())
        .and_then(|_| {
            if initial.measure.dim() == model.geom.dim {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "ensemble of dimension {} on a {}-torus",
                    initial.measure.dim(),
                    model.geom.dim
                )))
            }
        });
    if let Err(e) = setup {
        return Err(abort(traj, e));
    }
    let guard = match options.theta_guard {
        Some(g) => g,
        None => initial
            .measure
            .support_bounds()
            .map(|b| b.theta_min / 2.0)
            .unwrap_or(0.0),
    };

    let mut ens = initial.clone();
    let t0 = initial.t;
    traj.diagnostics.push(ens.diagnostics());
    traj.ensembles.push(ens.clone());
    for n in 1..=steps {
        match step_rk4(&ens, dt, model, guard) {
            Ok(mut next) => {
                next.t = t0 + n as f64 * dt;
                ens = next;
            }
            Err(e) => return Err(abort(traj, e)),
        }
        if n % save_every == 0 {
            traj.diagnostics.push(ens.diagnostics());
            traj.ensembles.push(ens.clone());
        }
    }
    Ok(traj)
}
