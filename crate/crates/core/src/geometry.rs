//! Periodic torus geometry `T^d = [0, L)^d`.
//!
//! Positions are stored unwrapped and reduced modulo the period only when a
//! distance is taken, so particle trajectories stay continuous across the seam.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusGeometry {
    pub dim: usize,
    #[serde(default = "default_period")]
    pub period: f64,
}

fn default_period() -> f64 {
    1.0
}

impl Default for TorusGeometry {
    fn default() -> Self {
        Self { dim: 1, period: 1.0 }
    }
}

impl TorusGeometry {
    pub fn new(dim: usize, period: f64) -> Result<Self> {
        let geom = Self { dim, period };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::Config(format!(
                "torus dimension must be 1 or 2, got {}",
                self.dim
            )));
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::Config(format!(
                "torus period must be positive and finite, got {}",
                self.period
            )));
        }
        Ok(())
    }

    /// Distance along one axis: `min(|a - b| mod L, L - |a - b| mod L)`.
    #[inline]
    pub fn axis_distance(&self, a: f64, b: f64) -> f64 {
        let r = (a - b).abs().rem_euclid(self.period);
        r.min(self.period - r)
    }

    /// Unchecked l1 torus distance; the hot loops call this with coordinates
    /// that were validated when the ensemble was built.
    #[inline]
    pub fn distance_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(&a, &b)| self.axis_distance(a, b))
            .sum()
    }

    /// Torus distance of a displacement from the origin.
    #[inline]
    pub fn norm_unchecked(&self, delta: &[f64]) -> f64 {
        delta.iter().map(|&a| self.axis_distance(a, 0.0)).sum()
    }

    /// Wrap a coordinate into `[0, L)`.
    #[inline]
    pub fn wrap(&self, a: f64) -> f64 {
        let w = a.rem_euclid(self.period);
        // rem_euclid can round up to exactly L for tiny negative inputs
        if w >= self.period {
            0.0
        } else {
            w
        }
    }

    /// Largest value `torus_distance` can take.
    pub fn diameter(&self) -> f64 {
        self.dim as f64 * self.period / 2.0
    }
}

/// Sum over axes of the periodic distance between `x` and `y`.
pub fn torus_distance(x: &[f64], y: &[f64], geom: &TorusGeometry) -> Result<f64> {
    if x.len() != geom.dim || y.len() != geom.dim {
        return Err(Error::Domain(format!(
            "expected points of dimension {}, got {} and {}",
            geom.dim,
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|c| !c.is_finite()) {
        return Err(Error::Domain("non-finite torus coordinate".into()));
    }
    Ok(geom.distance_unchecked(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(x: &[f64], y: &[f64], period: f64) -> f64 {
        // min over shifted copies of y, axis by axis
        x.iter()
            .zip(y)
            .map(|(&a, &b)| {
                (-8..=8)
                    .map(|k| (a - b - k as f64 * period).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    }

    #[test]
    fn wraps_around_the_seam() {
        let g = TorusGeometry::default();
        assert_abs_diff_eq!(torus_distance(&[0.9], &[0.1], &g).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(torus_distance(&[0.3], &[0.3], &g).unwrap(), 0.0);
    }

    #[test]
    fn two_dimensional_example_matches_brute_force() {
        let g = TorusGeometry::new(2, 1.0).unwrap();
        let d = torus_distance(&[0.0, 0.0], &[0.5, 0.9], &g).unwrap();
        assert_abs_diff_eq!(d, brute_force(&[0.0, 0.0], &[0.5, 0.9], 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(d, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_finite_and_mismatched_input() {
        let g = TorusGeometry::default();
        assert!(matches!(
            torus_distance(&[f64::NAN], &[0.0], &g),
            Err(Error::Domain(_))
        ));
        assert!(torus_distance(&[0.0, 1.0], &[0.0], &g).is_err());
        assert!(TorusGeometry::new(3, 1.0).is_err());
        assert!(TorusGeometry::new(1, 0.0).is_err());
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=2 {
            let g = TorusGeometry::new(dim, 1.0).unwrap();
            for _ in 0..10_000 {
                let mut p = || -> Vec<f64> { (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect() };
                let (x, y, z) = (p(), p(), p());
                let dxy = torus_distance(&x, &y, &g).unwrap();
                let dyx = torus_distance(&y, &x, &g).unwrap();
                let dxz = torus_distance(&x, &z, &g).unwrap();
                let dzy = torus_distance(&z, &y, &g).unwrap();
                assert_eq!(torus_distance(&x, &x, &g).unwrap(), 0.0);
                assert_abs_diff_eq!(dxy, dyx, epsilon = 1e-14);
                assert!(dxy <= dxz + dzy + 1e-14);
                assert!(dxy <= g.diameter() + 1e-14);
                assert_abs_diff_eq!(dxy, brute_force(&x, &y, 1.0), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn wrap_lands_in_fundamental_domain() {
        let g = TorusGeometry::new(1, 2.0).unwrap();
        for a in [-1e-18, -0.5, 0.0, 1.999, 2.0, 7.3] {
            let w = g.wrap(a);
            assert!((0.0..2.0).contains(&w), "{a} -> {w}");
        }
    }
}
