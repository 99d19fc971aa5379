//! Pseudo-spectral method-of-lines solver for the hydrodynamic system
//!
//! ```text
//! d_t rho      + d_x (rho u)   = 0
//! d_t (rho u)  + d_x (rho u^2) = rho (phi  * (rho u / e) - (u / e) (phi * rho))
//! d_t (rho e)  + d_x (rho u e) = rho ((1 / e) (zeta * rho) - zeta * (rho / e))
//! ```
//!
//! on the 1D torus. Conservative variables are advanced with classical RK4;
//! flux derivatives are Fourier derivatives with 2/3-rule dealiasing. The
//! nonlocal terms are grid convolutions supplied by a [`Convolver`].

mod convolution;
mod spectral;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use convolution::{
    Convolver, ConvolverRegistry, DirectConvolver, GridConvolution, SpectralConvolver,
};
pub use spectral::SpectralOps;

use crate::error::{Aborted, Error, Result, SimResult};
use crate::geometry::TorusGeometry;
use crate::initial::InitialData;
use crate::kernels::KernelPair;

#[derive(Debug, Clone, PartialEq)]
pub struct HydroState {
    pub geom: TorusGeometry,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub e: Vec<f64>,
    pub t: f64,
}

impl HydroState {
    pub fn new(geom: TorusGeometry, rho: Vec<f64>, u: Vec<f64>, e: Vec<f64>) -> Result<Self> {
        geom.validate()?;
        if geom.dim != 1 {
            return Err(Error::Config(format!(
                "the hydro solver is one-dimensional, got d = {}",
                geom.dim
            )));
        }
        if rho.is_empty() || rho.len() != u.len() || rho.len() != e.len() {
            return Err(Error::Domain(format!(
                "hydro fields must share a nonempty grid, got {}, {}, {} cells",
                rho.len(),
                u.len(),
                e.len()
            )));
        }
        if rho.iter().chain(&u).chain(&e).any(|v| !v.is_finite()) {
            return Err(Error::Domain("hydro fields must be finite".into()));
        }
        Ok(Self {
            geom,
            rho,
            u,
            e,
            t: 0.0,
        })
    }

    /// Samples `(rho_0, u_0, e_0)` at the cell centers.
    pub fn from_initial(initial: &InitialData, cells: usize, geom: TorusGeometry) -> Result<Self> {
        initial.validate(geom.period)?;
        let h = geom.period / cells as f64;
        let xs: Vec<f64> = (0..cells).map(|j| (j as f64 + 0.5) * h).collect();
        Self::new(
            geom,
            xs.iter().map(|&x| initial.rho.eval(x, geom.period)).collect(),
            xs.iter().map(|&x| initial.u.eval(x, geom.period)).collect(),
            xs.iter().map(|&x| initial.e.eval(x, geom.period)).collect(),
        )
    }

    pub fn cells(&self) -> usize {
        self.rho.len()
    }

    pub fn cell_width(&self) -> f64 {
        self.geom.period / self.cells() as f64
    }

    pub fn cell_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.cell_width()
    }

    pub fn mass(&self) -> f64 {
        self.cell_width() * self.rho.iter().sum::<f64>()
    }

    pub fn momentum(&self) -> f64 {
        self.cell_width() * self.rho.iter().zip(&self.u).map(|(r, u)| r * u).sum::<f64>()
    }

    pub fn energy(&self) -> f64 {
        self.cell_width() * self.rho.iter().zip(&self.e).map(|(r, e)| r * e).sum::<f64>()
    }

    pub fn min_e(&self) -> f64 {
        self.e.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Half-oscillation of `u` and relative half-oscillations of `rho`, `e`.
    pub fn perturbation_size(&self) -> f64 {
        fn spread(f: &[f64]) -> (f64, f64) {
            let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ((hi - lo) / 2.0, f.iter().sum::<f64>() / f.len() as f64)
        }
        let (r, rm) = spread(&self.rho);
        let (e, em) = spread(&self.e);
        let (u, _) = spread(&self.u);
        (r / rm.abs()).max(e / em.abs()).max(u)
    }

    fn to_conservative(&self) -> Conservative {
        Conservative {
            rho: self.rho.clone(),
            mom: self.rho.iter().zip(&self.u).map(|(r, u)| r * u).collect(),
            ener: self.rho.iter().zip(&self.e).map(|(r, e)| r * e).collect(),
        }
    }

    /// Header `x,rho,u,e`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        self.write_csv_to(&mut out).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn write_csv_to(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "x,rho,u,e")?;
        for j in 0..self.cells() {
            writeln!(out, "{},{},{},{}", self.cell_center(j), self.rho[j], self.u[j], self.e[j])?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path, period: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::parse(path, e))?;
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::parse(path, e))?
            .iter()
            .map(str::to_owned)
            .collect();
        if header != ["x", "rho", "u", "e"] {
            return Err(Error::parse(path, "expected header `x,rho,u,e`"));
        }
        let (mut rho, mut u, mut e) = (Vec::new(), Vec::new(), Vec::new());
        for record in reader.records() {
            let record = record.map_err(|err| Error::parse(path, err))?;
            let vals: Vec<f64> = record
                .iter()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|err| Error::parse(path, err))?;
            rho.push(vals[1]);
            u.push(vals[2]);
            e.push(vals[3]);
        }
        Self::new(TorusGeometry::new(1, period)?, rho, u, e)
    }
}

/// Time derivatives (or values) of `(rho, rho u, rho e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conservative {
    pub rho: Vec<f64>,
    pub mom: Vec<f64>,
    pub ener: Vec<f64>,
}

impl Conservative {
    fn axpy(&self, a: f64, k: &Conservative) -> Conservative {
        let f = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(x, y)| x + a * y).collect();
        Conservative {
            rho: f(&self.rho, &k.rho),
            mom: f(&self.mom, &k.mom),
            ener: f(&self.ener, &k.ener),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydroOptions {
    /// Divisor floor in the primitive recovery `u = (rho u) / rho`.
    pub rho_floor: f64,
    /// Abort threshold on `e`; defaults to half the initial minimum.
    pub e_floor: Option<f64>,
    /// Largest admissible upper-band spectral energy fraction.
    pub smoothness_limit: Option<f64>,
    /// Largest admissible initial perturbation size (see [`HydroState::perturbation_size`]).
    pub amplitude_envelope: Option<f64>,
    pub convolution: String,
}

impl Default for HydroOptions {
    fn default() -> Self {
        Self {
            rho_floor: 1e-10,
            e_floor: None,
            smoothness_limit: Some(1e-3),
            amplitude_envelope: Some(0.5),
            convolution: "spectral".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HydroDiagnostics {
    pub t: f64,
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    pub min_e: f64,
    pub smoothness: f64,
}

#[derive(Debug, Clone, Default)]
pub struct HydroTrajectory {
    pub states: Vec<HydroState>,
    pub diagnostics: Vec<HydroDiagnostics>,
}

impl HydroTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&HydroState> {
        self.states.last()
    }
}

pub struct HydroSolver {
    geom: TorusGeometry,
    cells: usize,
    phi: Box<dyn GridConvolution>,
    zeta: Box<dyn GridConvolution>,
    ops: SpectralOps,
    options: HydroOptions,
}

impl HydroSolver {
    pub fn new(geom: TorusGeometry, cells: usize, kernels: &KernelPair, options: HydroOptions) -> Result<Self> {
        geom.validate()?;
        if geom.dim != 1 {
            return Err(Error::Config("the hydro solver is one-dimensional".into()));
        }
        if cells < 2 {
            return Err(Error::Config(format!("hydro grid needs at least 2 cells, got {cells}")));
        }
        let registry = ConvolverRegistry::builtin();
        let conv = registry.get(&options.convolution)?;
        Ok(Self {
            geom,
            cells,
            phi: conv.plan(kernels.phi.as_ref(), &geom, cells),
            zeta: conv.plan(kernels.zeta.as_ref(), &geom, cells),
            ops: SpectralOps::new(cells, geom.period),
            options,
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn options(&self) -> &HydroOptions {
        &self.options
    }

    fn check_grid(&self, state: &HydroState) -> Result<()> {
        if state.cells() != self.cells || state.geom != self.geom {
            return Err(Error::Config(format!(
                "state on {} cells does not match solver grid of {} cells",
                state.cells(),
                self.cells
            )));
        }
        Ok(())
    }

    /// `phi * f` on the grid.
    pub fn convolve_phi(&self, f: &[f64]) -> Vec<f64> {
        self.phi.apply(f)
    }

    /// `zeta * f` on the grid.
    pub fn convolve_zeta(&self, f: &[f64]) -> Vec<f64> {
        self.zeta.apply(f)
    }

    pub fn nonlocal_alignment(&self, state: &HydroState) -> Result<Vec<f64>> {
        self.check_grid(state)?;
        nonlocal_alignment(state, self.phi.as_ref())
    }

    pub fn nonlocal_exchange(&self, state: &HydroState) -> Result<Vec<f64>> {
        self.check_grid(state)?;
        nonlocal_exchange(state, self.zeta.as_ref())
    }

    /// Largest upper-band energy fraction over `rho`, `u` and `e`.
    pub fn smoothness(&self, state: &HydroState) -> f64 {
        [&state.rho, &state.u, &state.e]
            .iter()
            .map(|f| self.ops.upper_band_fraction(f))
            .fold(0.0, f64::max)
    }

    /// Conservative time derivatives of `(rho, rho u, rho e)`.
    pub fn rhs(&self, state: &HydroState) -> Result<Conservative> {
        self.check_grid(state)?;
        if let Some(limit) = self.options.smoothness_limit {
            let fraction = self.smoothness(state);
            if fraction > limit {
                return Err(Error::Resolution {
                    time: state.t,
                    fraction,
                    limit,
                });
            }
        }
        self.rhs_unchecked(state)
    }

    fn rhs_unchecked(&self, state: &HydroState) -> Result<Conservative> {
        let align = nonlocal_alignment(state, self.phi.as_ref())?;
        let exchange = nonlocal_exchange(state, self.zeta.as_ref())?;
        let mass_flux: Vec<f64> = state.rho.iter().zip(&state.u).map(|(r, u)| r * u).collect();
        let mom_flux: Vec<f64> = mass_flux.iter().zip(&state.u).map(|(m, u)| m * u).collect();
        let ener_flux: Vec<f64> = mass_flux.iter().zip(&state.e).map(|(m, e)| m * e).collect();
        let neg_div = |f: &[f64]| -> Vec<f64> { self.ops.derivative(f).into_iter().map(|d| -d).collect() };
        let mut mom = neg_div(&mom_flux);
        mom.iter_mut().zip(&align).for_each(|(m, a)| *m += a);
        let mut ener = neg_div(&ener_flux);
        ener.iter_mut().zip(&exchange).for_each(|(en, x)| *en += x);
        Ok(Conservative {
            rho: neg_div(&mass_flux),
            mom,
            ener,
        })
    }

    /// `(d_t rho, d_t u, d_t e)` implied by the conservative derivatives.
    pub fn primitive_rates(&self, state: &HydroState) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let k = self.rhs_unchecked(state)?;
        let floor = self.options.rho_floor;
        let u_t = (0..self.cells)
            .map(|j| (k.mom[j] - state.u[j] * k.rho[j]) / state.rho[j].max(floor))
            .collect();
        let e_t = (0..self.cells)
            .map(|j| (k.ener[j] - state.e[j] * k.rho[j]) / state.rho[j].max(floor))
            .collect();
        Ok((k.rho, u_t, e_t))
    }

    fn primitive(&self, c: &Conservative, t: f64, e_floor: f64) -> Result<HydroState> {
        let floor = self.options.rho_floor;
        if let Some(j) = c.rho.iter().position(|&r| !(r >= -1e-12)) {
            return Err(Error::HydroAbort {
                time: t,
                reason: format!("density {} < -1e-12 in cell {j}", c.rho[j]),
            });
        }
        let u: Vec<f64> = c.mom.iter().zip(&c.rho).map(|(m, r)| m / r.max(floor)).collect();
        let e: Vec<f64> = c.ener.iter().zip(&c.rho).map(|(en, r)| en / r.max(floor)).collect();
        if let Some(j) = e.iter().position(|&v| !(v > e_floor)) {
            return Err(Error::HydroAbort {
                time: t,
                reason: format!("e = {} fell to the floor {e_floor} in cell {j}", e[j]),
            });
        }
        Ok(HydroState {
            geom: self.geom,
            rho: c.rho.clone(),
            u,
            e,
            t,
        })
    }

    pub fn step_rk4(&self, state: &HydroState, dt: f64, e_floor: f64) -> Result<HydroState> {
        let u0 = state.to_conservative();
        let t = state.t;
        let k1 = self.rhs_unchecked(state)?;
        let s2 = self.primitive(&u0.axpy(dt / 2.0, &k1), t + dt / 2.0, e_floor)?;
        let k2 = self.rhs_unchecked(&s2)?;
        let s3 = self.primitive(&u0.axpy(dt / 2.0, &k2), t + dt / 2.0, e_floor)?;
        let k3 = self.rhs_unchecked(&s3)?;
        let s4 = self.primitive(&u0.axpy(dt, &k3), t + dt, e_floor)?;
        let k4 = self.rhs_unchecked(&s4)?;
        let combine = |x: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..x.len())
                .map(|j| x[j] + dt / 6.0 * (a[j] + 2.0 * b[j] + 2.0 * c[j] + d[j]))
                .collect()
        };
        let next = Conservative {
            rho: combine(&u0.rho, &k1.rho, &k2.rho, &k3.rho, &k4.rho),
            mom: combine(&u0.mom, &k1.mom, &k2.mom, &k3.mom, &k4.mom),
            ener: combine(&u0.ener, &k1.ener, &k2.ener, &k3.ener, &k4.ener),
        };
        self.primitive(&next, t + dt, e_floor)
    }

    fn diagnostics(&self, s: &HydroState) -> HydroDiagnostics {
        HydroDiagnostics {
            t: s.t,
            mass: s.mass(),
            momentum: s.momentum(),
            energy: s.energy(),
            min_e: s.min_e(),
            smoothness: self.smoothness(s),
        }
    }

    /// RK4 march to `horizon`, saving every `save_every` steps.
    pub fn simulate(
        &self,
        initial: &HydroState,
        horizon: f64,
        dt: f64,
        save_every: usize,
    ) -> SimResult<HydroTrajectory> {
        let mut traj = HydroTrajectory::default();
        let abort = |traj: HydroTrajectory, error: Error| Box::new(Aborted { partial: traj, error });
        let steps = match step_count(horizon, dt, save_every) {
            Ok(s) => s,
            Err(e) => return Err(abort(traj, e)),
        };
        if let Err(e) = self.check_grid(initial) {
            return Err(abort(traj, e));
        }
        if let Some(envelope) = self.options.amplitude_envelope {
            let size = initial.perturbation_size();
            if size > envelope {
                return Err(abort(
                    traj,
                    Error::Config(format!(
                        "initial perturbation size {size:.3} exceeds the small-data envelope {envelope}"
                    )),
                ));
            }
        }
        let e_floor = self
            .options
            .e_floor
            .unwrap_or_else(|| initial.min_e() / 2.0);
        if !(initial.min_e() > e_floor) {
            return Err(abort(
                traj,
                Error::State(format!("initial e has minimum {} <= floor {e_floor}", initial.min_e())),
            ));
        }

        let first = self.diagnostics(initial);
        if let Some(limit) = self.options.smoothness_limit {
            if first.smoothness > limit {
                let error = Error::Resolution {
                    time: initial.t,
                    fraction: first.smoothness,
                    limit,
                };
                return Err(abort(traj, error));
            }
        }

        let mut state = initial.clone();
        let t0 = initial.t;
        traj.diagnostics.push(first);
        traj.states.push(state.clone());
        for n in 1..=steps {
            match self.step_rk4(&state, dt, e_floor) {
                Ok(mut next) => {
                    next.t = t0 + n as f64 * dt;
                    state = next;
                }
                Err(e) => return Err(abort(traj, e)),
            }
            if n % save_every == 0 {
                let diag = self.diagnostics(&state);
                if let Some(limit) = self.options.smoothness_limit {
                    if diag.smoothness > limit {
                        let error = Error::Resolution {
                            time: state.t,
                            fraction: diag.smoothness,
                            limit,
                        };
                        return Err(abort(traj, error));
                    }
                }
                traj.diagnostics.push(diag);
                traj.states.push(state.clone());
            }
        }
        Ok(traj)
    }
}

/// Number of steps of size `dt` covering `horizon`, which must be a whole
/// number of save intervals.
pub(crate) fn step_count(horizon: f64, dt: f64, save_every: usize) -> Result<usize> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if save_every == 0 {
        return Err(Error::Config("save interval must be at least one step".into()));
    }
    let steps = (horizon / dt).round() as usize;
    if steps == 0 || ((steps as f64) * dt - horizon).abs() > 1e-9 * horizon {
        return Err(Error::Config(format!(
            "dt = {dt} does not divide the horizon {horizon}"
        )));
    }
    if steps % save_every != 0 {
        return Err(Error::Config(format!(
            "save interval of {save_every} steps does not divide {steps} steps"
        )));
    }
    Ok(steps)
}

/// `rho (phi * (rho u / e) - (u / e) (phi * rho))`.
pub fn nonlocal_alignment(state: &HydroState, phi: &dyn GridConvolution) -> Result<Vec<f64>> {
    check_positive_e(state)?;
    let q: Vec<f64> = state.u.iter().zip(&state.e).map(|(u, e)| u / e).collect();
    let rho_q: Vec<f64> = state.rho.iter().zip(&q).map(|(r, q)| r * q).collect();
    let a = phi.apply(&rho_q);
    let b = phi.apply(&state.rho);
    Ok((0..state.cells())
        .map(|j| state.rho[j] * (a[j] - q[j] * b[j]))
        .collect())
}

/// `rho ((1 / e) (zeta * rho) - zeta * (rho / e))`.
pub fn nonlocal_exchange(state: &HydroState, zeta: &dyn GridConvolution) -> Result<Vec<f64>> {
    check_positive_e(state)?;
    let rho_over_e: Vec<f64> = state.rho.iter().zip(&state.e).map(|(r, e)| r / e).collect();
    let a = zeta.apply(&state.rho);
    let b = zeta.apply(&rho_over_e);
    Ok((0..state.cells())
        .map(|j| state.rho[j] * (a[j] / state.e[j] - b[j]))
        .collect())
}

fn check_positive_e(state: &HydroState) -> Result<()> {
    match state.e.iter().position(|&e| !(e > 0.0)) {
        Some(j) => Err(Error::State(format!(
            "e = {} <= 0 in cell {j} at t = {}",
            state.e[j], state.t
        ))),
        None => Ok(()),
    }
}

pub fn hydro_rhs(state: &HydroState, solver: &HydroSolver) -> Result<Conservative> {
    solver.rhs(state)
}

pub fn simulate_hydro(
    initial: &HydroState,
    horizon: f64,
    dt: f64,
    save_every: usize,
    solver: &HydroSolver,
) -> SimResult<HydroTrajectory> {
    solver.simulate(initial, horizon, dt, save_every)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::TrigPolynomial;
    use crate::kernels::KernelSpec;
    use std::f64::consts::PI;

    fn kernels() -> KernelPair {
        KernelPair::from_specs(
            &KernelSpec::radial_rational(1.0, 1.0),
            &KernelSpec::radial_rational(0.5, 1.0),
        )
        .unwrap()
    }

    fn smooth_initial() -> InitialData {
        InitialData {
            rho: TrigPolynomial::new(1.0, vec![0.2], vec![]),
            u: TrigPolynomial::new(0.0, vec![], vec![0.1]),
            e: TrigPolynomial::new(1.0, vec![0.0], vec![0.2]),
        }
    }

    fn geom() -> TorusGeometry {
        TorusGeometry::default()
    }

    #[test]
    fn aligned_state_has_no_nonlocal_forcing() {
        let solver = HydroSolver::new(geom(), 16, &kernels(), HydroOptions::default()).unwrap();
        let x: Vec<f64> = (0..16).map(|j| (j as f64 + 0.5) / 16.0).collect();
        let rho: Vec<f64> = x.iter().map(|x| 1.0 + 0.3 * (2.0 * PI * x).sin()).collect();
        let e: Vec<f64> = x.iter().map(|x| 1.0 + 0.2 * (2.0 * PI * x).cos()).collect();
        let u: Vec<f64> = e.iter().map(|e| 0.4 * e).collect();
        let s = HydroState::new(geom(), rho, u, e).unwrap();
        assert!(solver.nonlocal_alignment(&s).unwrap().iter().all(|a| a.abs() < 1e-14));
        let zero = HydroState::new(geom(), vec![0.0; 16], vec![0.3; 16], vec![1.0; 16]).unwrap();
        assert!(solver.nonlocal_alignment(&zero).unwrap().iter().all(|a| *a == 0.0));
        let flat_e = HydroState::new(geom(), s.rho.clone(), s.u.clone(), vec![2.0; 16]).unwrap();
        assert!(solver.nonlocal_exchange(&flat_e).unwrap().iter().all(|a| a.abs() < 1e-14));
    }

    #[test]
    fn two_cell_nonlocal_terms_match_hand_expansion() {
        let k = kernels();
        let s = HydroState::new(geom(), vec![1.0, 2.0], vec![0.5, -0.25], vec![1.0, 2.0]).unwrap();
        // phi(0) = 1, phi(0.5) = 0.8; zeta = phi / 2; h = 0.5
        let (p0, p1) = (1.0, 0.8);
        let q = [0.5, -0.125];
        let a0 = 1.0 * 0.5 * (p0 * (q[0] - q[0]) * 1.0 + p1 * (q[1] - q[0]) * 2.0);
        let a1 = 2.0 * 0.5 * (p1 * (q[0] - q[1]) * 1.0 + p0 * (q[1] - q[1]) * 2.0);
        let e0 = 1.0 * 0.5 * 0.5 * (p0 * (1.0 - 1.0) * 1.0 + p1 * (1.0 - 0.5) * 2.0);
        let e1 = 2.0 * 0.5 * 0.5 * (p1 * (0.5 - 1.0) * 1.0 + p0 * (0.5 - 0.5) * 2.0);
        for conv in ["direct", "spectral"] {
            let opts = HydroOptions {
                convolution: conv.into(),
                ..HydroOptions::default()
            };
            let solver = HydroSolver::new(geom(), 2, &k, opts).unwrap();
            let a = solver.nonlocal_alignment(&s).unwrap();
            let e = solver.nonlocal_exchange(&s).unwrap();
            assert!((a[0] - a0).abs() < 1e-14 && (a[1] - a1).abs() < 1e-14, "{conv}: {a:?}");
            assert!((e[0] - e0).abs() < 1e-14 && (e[1] - e1).abs() < 1e-14, "{conv}: {e:?}");
            assert!((a[0] + a[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn convolution_paths_agree_on_smooth_states() {
        let s = HydroState::from_initial(&smooth_initial(), 48, geom()).unwrap();
        let direct = HydroSolver::new(
            geom(),
            48,
            &kernels(),
            HydroOptions {
                convolution: "direct".into(),
                ..HydroOptions::default()
            },
        )
        .unwrap();
        let spectral = HydroSolver::new(geom(), 48, &kernels(), HydroOptions::default()).unwrap();
        for (a, b) in direct
            .nonlocal_alignment(&s)
            .unwrap()
            .iter()
            .zip(&spectral.nonlocal_alignment(&s).unwrap())
        {
            assert!((a - b).abs() < 1e-10);
        }
        let ex = spectral.nonlocal_exchange(&s).unwrap();
        assert!(ex.iter().sum::<f64>().abs() * s.cell_width() < 1e-14);
    }

    #[test]
    fn constant_state_is_steady() {
        let s = HydroState::new(geom(), vec![1.3; 32], vec![0.4; 32], vec![0.9; 32]).unwrap();
        let solver = HydroSolver::new(geom(), 32, &kernels(), HydroOptions::default()).unwrap();
        let k = solver.rhs(&s).unwrap();
        assert!(k.rho.iter().chain(&k.mom).chain(&k.ener).all(|v| v.abs() < 1e-14));
        let traj = solver.simulate(&s, 0.5, 0.01, 10).unwrap();
        let last = traj.last().unwrap();
        for j in 0..32 {
            assert!((last.rho[j] - 1.3).abs() < 1e-14);
            assert!((last.u[j] - 0.4).abs() < 1e-14);
            assert!((last.e[j] - 0.9).abs() < 1e-14);
        }
        assert_eq!(traj.states.len(), 6);
        assert!((last.t - 0.5).abs() < 1e-15);
    }

    #[test]
    fn aligned_steady_state_rates_vanish() {
        let solver = HydroSolver::new(geom(), 32, &kernels(), HydroOptions::default()).unwrap();
        let x: Vec<f64> = (0..32).map(|j| (j as f64 + 0.5) / 32.0).collect();
        let rho = x.iter().map(|x| 1.0 + 0.3 * (2.0 * PI * x).cos()).collect();
        let s = HydroState::new(geom(), rho, vec![0.7; 32], vec![1.5; 32]).unwrap();
        let (_, u_t, e_t) = solver.primitive_rates(&s).unwrap();
        assert!(u_t.iter().chain(&e_t).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn free_transport_conserves_mass() {
        let zero = KernelPair::zero();
        let solver = HydroSolver::new(geom(), 32, &zero, HydroOptions::default()).unwrap();
        let s = HydroState::from_initial(&smooth_initial(), 32, geom()).unwrap();
        // pressureless transport steepens, so stop well before the monitor trips
        let traj = solver.simulate(&s, 0.5, 0.005, 20).unwrap();
        let m0 = traj.diagnostics[0].mass;
        for d in &traj.diagnostics {
            assert!(((d.mass - m0) / m0).abs() < 1e-12);
        }
    }

    #[test]
    fn conservation_on_small_sinusoidal_data() {
        let solver = HydroSolver::new(geom(), 32, &kernels(), HydroOptions::default()).unwrap();
        let s = HydroState::from_initial(&smooth_initial(), 32, geom()).unwrap();
        let traj = solver.simulate(&s, 1.0, 0.005, 20).unwrap();
        let d0 = traj.diagnostics[0];
        for d in &traj.diagnostics {
            assert!(((d.mass - d0.mass) / d0.mass).abs() <= 1e-12);
            assert!((d.momentum - d0.momentum).abs() <= 1e-8 * d0.mass);
            assert!(((d.energy - d0.energy) / d0.energy).abs() <= 1e-8);
            assert!(d.min_e >= d0.min_e - 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let solver = HydroSolver::new(geom(), 8, &kernels(), HydroOptions::default()).unwrap();
        let bad = HydroState::new(geom(), vec![1.0; 8], vec![0.0; 8], vec![0.0; 8]).unwrap();
        assert!(matches!(solver.rhs(&bad), Err(Error::State(_))));
        let wrong_grid = HydroState::new(geom(), vec![1.0; 4], vec![0.0; 4], vec![1.0; 4]).unwrap();
        assert!(solver.rhs(&wrong_grid).is_err());
        assert!(HydroSolver::new(TorusGeometry::new(2, 1.0).unwrap(), 8, &kernels(), HydroOptions::default()).is_err());
        let s = HydroState::new(geom(), vec![1.0; 8], vec![0.0; 8], vec![1.0; 8]).unwrap();
        assert!(solver.simulate(&s, 1.0, 0.3, 1).is_err());
        let big = InitialData {
            rho: TrigPolynomial::new(1.0, vec![0.9], vec![]),
            ..InitialData::constant(1.0, 0.0, 1.0)
        };
        let s = HydroState::from_initial(&big, 8, geom()).unwrap();
        let err = solver.simulate(&s, 0.1, 0.01, 1).unwrap_err();
        assert!(matches!(err.error, Error::Config(_)));
        assert!(err.partial.states.is_empty());
    }

    #[test]
    fn smoothness_monitor_trips_on_rough_data() {
        let solver = HydroSolver::new(geom(), 32, &kernels(), HydroOptions::default()).unwrap();
        let rho: Vec<f64> = (0..32).map(|j| if j < 16 { 1.0 } else { 1.2 }).collect();
        let s = HydroState::new(geom(), rho, vec![0.0; 32], vec![1.0; 32]).unwrap();
        assert!(matches!(solver.rhs(&s), Err(Error::Resolution { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let s = HydroState::from_initial(&smooth_initial(), 8, geom()).unwrap();
        s.write_csv(&path).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("x,rho,u,e\n0.0625,"));
        let back = HydroState::read_csv(&path, 1.0).unwrap();
        assert_eq!(back.rho, s.rho);
        assert_eq!(back.e, s.e);
    }
}
