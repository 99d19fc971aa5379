//! Explicit a-priori constants for the kinetic dynamics.

use serde::Serialize;

use crate::kernels::KernelPair;

use super::KineticTrajectory;

/// `|v(t)|^2 <= e^t (P_0^2 + K^2 (1 - e^{-t}))`, the Gronwall bound obtained
/// from `d|v|^2/dt <= 2 |v| K <= |v|^2 + K^2` with `K = |phi|_inf P_T m_0 / theta_m`.
pub fn velocity_envelope(p0: f64, k: f64, t: f64) -> f64 {
    (t.exp() * (p0 * p0 + k * k * (1.0 - (-t).exp()))).sqrt()
}

/// Velocity envelope parameters measured on a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocityEnvelope {
    /// Initial largest speed.
    pub p0: f64,
    /// Largest speed over the whole trajectory.
    pub p_t: f64,
    pub m0: f64,
    /// Initial smallest temperature.
    pub theta_m: f64,
    /// Bound on `|a|`.
    pub k: f64,
}

impl VelocityEnvelope {
    pub fn from_trajectory(traj: &KineticTrajectory, kernels: &KernelPair) -> Option<Self> {
        let first = traj.diagnostics.first()?;
        let p_t = traj
            .diagnostics
            .iter()
            .map(|d| d.max_speed)
            .fold(0.0, f64::max);
        let k = kernels.phi.sup_norm() * p_t * first.mass / first.min_theta;
        Some(Self {
            p0: first.max_speed,
            p_t,
            m0: first.mass,
            theta_m: first.min_theta,
            k,
        })
    }

    /// Envelope at elapsed time `t` from the initial save.
    pub fn bound(&self, t: f64) -> f64 {
        velocity_envelope(self.p0, self.k, t)
    }

    /// Save times where the largest speed exceeds the envelope.
    pub fn violations(&self, traj: &KineticTrajectory) -> Vec<(f64, f64, f64)> {
        let t0 = traj.diagnostics.first().map_or(0.0, |d| d.t);
        traj.diagnostics
            .iter()
            .filter_map(|d| {
                let b = self.bound(d.t - t0);
                (d.max_speed > b).then_some((d.t, d.max_speed, b))
            })
            .collect()
    }
}

/// Sup bounds and Lipschitz constants in `x` of the mean-field functionals
/// of a measure with mass `m0`, speeds at most `p` and temperatures at least
/// `theta_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalBounds {
    pub a_sup: f64,
    pub b_sup: f64,
    pub rho_phi_sup: f64,
    pub rho_zeta_sup: f64,
    pub a_lip: f64,
    pub b_lip: f64,
    pub rho_phi_lip: f64,
    pub rho_zeta_lip: f64,
}

pub fn functional_bounds(kernels: &KernelPair, p: f64, m0: f64, theta_m: f64) -> FunctionalBounds {
    let (phi, zeta) = (&kernels.phi, &kernels.zeta);
    FunctionalBounds {
        a_sup: phi.sup_norm() * p * m0 / theta_m,
        b_sup: zeta.sup_norm() * m0 / theta_m,
        rho_phi_sup: phi.sup_norm() * m0,
        rho_zeta_sup: zeta.sup_norm() * m0,
        a_lip: phi.lip_constant() * p * m0 / theta_m,
        b_lip: zeta.lip_constant() * m0 / theta_m,
        rho_phi_lip: phi.lip_constant() * m0,
        rho_zeta_lip: zeta.lip_constant() * m0,
    }
}

/// Constants `C` with `|f(x, mu) - f(x, nu)| <= C d(mu, nu)` for each
/// functional `f`, valid when both supports have speeds at most `p` and
/// temperatures at least `theta_m`. The vector `a` picks up a factor
/// `sqrt(d)` from bounding it componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityConstants {
    pub a: f64,
    pub b: f64,
    pub rho_phi: f64,
    pub rho_zeta: f64,
}

pub fn functional_stability_constants(kernels: &KernelPair, p: f64, theta_m: f64, dim: usize) -> StabilityConstants {
    let (ps, pl) = (kernels.phi.sup_norm(), kernels.phi.lip_constant());
    let (zs, zl) = (kernels.zeta.sup_norm(), kernels.zeta.lip_constant());
    let a = (ps * p / theta_m).max(pl * p / theta_m + ps / theta_m + ps * p / (theta_m * theta_m));
    let b = (zs / theta_m).max(zl / theta_m + zs / (theta_m * theta_m));
    StabilityConstants {
        a: a * (dim as f64).sqrt(),
        b,
        rho_phi: ps.max(pl),
        rho_zeta: zs.max(zl),
    }
}
