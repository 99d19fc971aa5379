//! Two characteristic curves from the same starting point, each driven by the
//! mean field of a different precomputed trajectory.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{phase_distance, PhasePoint};

use super::{force_F, force_G, functionals_at, KineticModel, KineticTrajectory, MeanFieldFunctionals};

/// `Delta_z(t)`, the running integral of `d(mu_tau, nu_tau)` and their ratio
/// at each save time. The ratio is `None` where the integral vanishes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledSeries {
    pub t: Vec<f64>,
    pub delta: Vec<f64>,
    pub integral: Vec<f64>,
    pub ratio: Vec<Option<f64>>,
}

impl CoupledSeries {
    /// Largest defined ratio, if any.
    pub fn max_ratio(&self) -> Option<f64> {
        self.ratio.iter().flatten().copied().reduce(f64::max)
    }
}

/// Mean field of a trajectory, linear in time between save points.
struct FrozenField<'a> {
    traj: &'a KineticTrajectory,
    model: &'a KineticModel,
}

impl FrozenField<'_> {
    fn at(&self, k: usize, s: f64, x: &[f64]) -> Result<MeanFieldFunctionals> {
        let lo = functionals_at(x, &self.traj.ensembles[k].measure, self.model)?;
        if s == 0.0 {
            return Ok(lo);
        }
        let hi = functionals_at(x, &self.traj.ensembles[k + 1].measure, self.model)?;
        Ok(lo.lerp(&hi, s))
    }

    fn rates(&self, k: usize, s: f64, z: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let f = self.at(k, s, &z.x)?;
        let g = if self.model.thermal { force_G(z, &f)? } else { 0.0 };
        Ok((z.v.clone(), force_F(z, &f)?, g))
    }

    /// RK4 across `[t_k, t_{k+1}]` in `substeps` equal steps.
    fn advance(&self, k: usize, z: &PhasePoint, substeps: usize) -> Result<PhasePoint> {
        let dt = self.traj.ensembles[k + 1].t - self.traj.ensembles[k].t;
        let h = dt / substeps as f64;
        let ds = 1.0 / substeps as f64;
        let shift = |z: &PhasePoint, c: f64, r: &(Vec<f64>, Vec<f64>, f64)| PhasePoint {
            x: z.x.iter().zip(&r.0).map(|(a, b)| a + c * b).collect(),
            v: z.v.iter().zip(&r.1).map(|(a, b)| a + c * b).collect(),
            theta: z.theta + c * r.2,
        };
        let mut z = z.clone();
        for n in 0..substeps {
            let s = n as f64 * ds;
            let k1 = self.rates(k, s, &z)?;
            let k2 = self.rates(k, s + ds / 2.0, &shift(&z, h / 2.0, &k1))?;
            let k3 = self.rates(k, s + ds / 2.0, &shift(&z, h / 2.0, &k2))?;
            let k4 = self.rates(k, (s + ds).min(1.0), &shift(&z, h, &k3))?;
            let comb = |a: &[f64], b: &[f64], c: &[f64], d: &[f64], base: &[f64]| -> Vec<f64> {
                (0..base.len())
                    .map(|i| base[i] + h * ((a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]) / 6.0))
                    .collect()
            };
            z = PhasePoint {
                x: comb(&k1.0, &k2.0, &k3.0, &k4.0, &z.x),
                v: comb(&k1.1, &k2.1, &k3.1, &k4.1, &z.v),
                theta: z.theta + h * ((k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2) / 6.0),
            };
            if !(z.theta > 0.0) {
                return Err(Error::State(format!(
                    "characteristic temperature fell to {} in save interval {k}",
                    z.theta
                )));
            }
        }
        Ok(z)
    }
}

/// Integrates the characteristic system from `z0` twice, under the mean
/// fields of `traj_a` and `traj_b`, and pairs the gap `Delta_z(t)` with the
/// trapezoid integral of `distances` (the bounded-Lipschitz distances between
/// the two trajectories at the save times).
pub fn coupled_characteristics(
    z0: &PhasePoint,
    traj_a: &KineticTrajectory,
    traj_b: &KineticTrajectory,
    distances: &[f64],
    model: &KineticModel,
    substeps: usize,
) -> Result<CoupledSeries> {
    z0.validate()?;
    let ta = traj_a.times();
    let tb = traj_b.times();
    if ta.is_empty() || ta.len() != tb.len() || distances.len() != ta.len() {
        return Err(Error::Config(format!(
            "coupled trajectories need matching save grids: {} vs {} times, {} distances",
            ta.len(),
            tb.len(),
            distances.len()
        )));
    }
    if ta.iter().zip(&tb).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0)) {
        return Err(Error::Config("coupled trajectories are saved at different times".into()));
    }
    if z0.dim() != model.geom.dim {
        return Err(Error::Config("starting point dimension does not match the torus".into()));
    }
    if substeps == 0 {
        return Err(Error::Config("substeps must be positive".into()));
    }
    let fa = FrozenField { traj: traj_a, model };
    let fb = FrozenField { traj: traj_b, model };
    let (mut za, mut zb) = (z0.clone(), z0.clone());
    let mut out = CoupledSeries {
        t: vec![ta[0]],
        delta: vec![0.0],
        integral: vec![0.0],
        ratio: vec![None],
    };
    for k in 0..ta.len() - 1 {
        za = fa.advance(k, &za, substeps)?;
        zb = fb.advance(k, &zb, substeps)?;
        let delta = phase_distance(&za, &zb, &model.geom);
        let integral = out.integral[k] + 0.5 * (ta[k + 1] - ta[k]) * (distances[k] + distances[k + 1]);
        out.t.push(ta[k + 1]);
        out.delta.push(delta);
        out.integral.push(integral);
        out.ratio.push((integral > 0.0).then(|| delta / integral));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TorusGeometry;
    use crate::kernels::{KernelPair, KernelSpec};
    use crate::kinetic::{simulate_kinetic, KineticOptions, ParticleEnsemble};
    use crate::measures::WeightedMeasure;

    fn model() -> KineticModel {
        KineticModel::new(
            TorusGeometry::default(),
            KernelPair::from_specs(&KernelSpec::radial_rational(1.0, 1.0), &KernelSpec::radial_rational(1.0, 1.0)).unwrap(),
        )
    }

    fn traj(shift: f64) -> KineticTrajectory {
        let n = 8;
        let m = WeightedMeasure::from_parts(
            1,
            (0..n).map(|i| i as f64 / n as f64).collect(),
            (0..n).map(|i| 0.3 * (i as f64).sin() + shift).collect(),
            (0..n).map(|i| 1.0 + 0.2 * (i as f64).cos().abs()).collect(),
            vec![1.0 / n as f64; n],
        )
        .unwrap();
        simulate_kinetic(&ParticleEnsemble::new(m), 0.5, 0.01, 5, &model(), &KineticOptions::default()).unwrap()
    }

    #[test]
    fn identical_trajectories_give_zero_gap() {
        let a = traj(0.0);
        let z0 = PhasePoint::new(vec![0.3], vec![0.1], 1.1).unwrap();
        let d = vec![0.0; a.ensembles.len()];
        let s = coupled_characteristics(&z0, &a, &a, &d, &model(), 2).unwrap();
        assert!(s.delta.iter().all(|&x| x == 0.0));
        assert!(s.ratio.iter().all(Option::is_none));
        assert_eq!(s.max_ratio(), None);
    }

    #[test]
    fn perturbed_pair_has_finite_ratio() {
        let (a, b) = (traj(0.0), traj(0.01));
        let z0 = PhasePoint::new(vec![0.3], vec![0.1], 1.1).unwrap();
        let d = vec![0.01; a.ensembles.len()];
        let s = coupled_characteristics(&z0, &a, &b, &d, &model(), 2).unwrap();
        assert!(s.delta.last().unwrap() > &0.0);
        let r = s.max_ratio().unwrap();
        assert!(r.is_finite() && r > 0.0);
        assert!((s.integral.last().unwrap() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn mismatched_grids_are_config_errors() {
        let a = traj(0.0);
        let mut b = a.clone();
        b.ensembles.pop();
        let z0 = PhasePoint::new(vec![0.3], vec![0.1], 1.1).unwrap();
        let d = vec![0.0; a.ensembles.len()];
        assert!(matches!(
            coupled_characteristics(&z0, &a, &b, &d, &model(), 1),
            Err(Error::Config(_))
        ));
    }
}
