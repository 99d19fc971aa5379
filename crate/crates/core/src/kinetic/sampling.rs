//! Particle ensembles drawn from mono-kinetic data `(rho_0, u_0, e_0)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;
use crate::initial::InitialData;
use crate::measures::WeightedMeasure;

fn check_1d(geom: &TorusGeometry, n: usize) -> Result<()> {
    geom.validate()?;
    if geom.dim != 1 {
        return Err(Error::Config("mono-kinetic sampling is one-dimensional".into()));
    }
    if n == 0 {
        return Err(Error::Config("particle count must be positive".into()));
    }
    Ok(())
}

/// One atom per cell center with weight `rho_0(x_j) h`, velocity `u_0(x_j)`
/// and temperature `e_0(x_j)`.
pub fn grid_sample(initial: &InitialData, n: usize, geom: &TorusGeometry) -> Result<WeightedMeasure> {
    check_1d(geom, n)?;
    initial.validate(geom.period)?;
    let l = geom.period;
    let h = l / n as f64;
    let x: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
    WeightedMeasure::from_parts(
        1,
        x.clone(),
        x.iter().map(|&x| initial.u.eval(x, l)).collect(),
        x.iter().map(|&x| initial.e.eval(x, l)).collect(),
        x.iter().map(|&x| initial.rho.eval(x, l) * h).collect(),
    )
}

/// `n` i.i.d. positions from `rho_0 / m_0` by rejection sampling, each with
/// weight `m_0 / n`.
pub fn iid_sample(initial: &InitialData, n: usize, geom: &TorusGeometry, seed: u64) -> Result<WeightedMeasure> {
    check_1d(geom, n)?;
    initial.validate(geom.period)?;
    let l = geom.period;
    // the dense maximum can miss the true peak by a hair
    let ceiling = initial.rho.dense_max(l) * (1.0 + 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    while x.len() < n {
        let cand: f64 = rng.random_range(0.0..l);
        let accept: f64 = rng.random_range(0.0..ceiling);
        if accept < initial.rho.eval(cand, l) {
            x.push(cand);
        }
    }
    let w = initial.total_mass(l) / n as f64;
    WeightedMeasure::from_parts(
        1,
        x.clone(),
        x.iter().map(|&x| initial.u.eval(x, l)).collect(),
        x.iter().map(|&x| initial.e.eval(x, l)).collect(),
        vec![w; n],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::TrigPolynomial;

    fn data() -> InitialData {
        InitialData {
            rho: TrigPolynomial::new(1.0, vec![0.3], vec![]),
            u: TrigPolynomial::new(0.1, vec![], vec![0.2]),
            e: TrigPolynomial::new(2.0, vec![0.5], vec![]),
        }
    }

    #[test]
    fn grid_sample_uses_midpoint_quadrature() {
        let m = grid_sample(&data(), 4, &TorusGeometry::default()).unwrap();
        assert_eq!(m.positions(), &[0.125, 0.375, 0.625, 0.875]);
        // trigonometric modes below n integrate exactly
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
        assert!((m.theta(0) - (2.0 + 0.5 * (std::f64::consts::PI / 4.0).cos())).abs() < 1e-15);
    }

    #[test]
    fn iid_sample_is_reproducible() {
        let g = TorusGeometry::default();
        let a = iid_sample(&data(), 200, &g, 7).unwrap();
        let b = iid_sample(&data(), 200, &g, 7).unwrap();
        let c = iid_sample(&data(), 200, &g, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.total_mass() - 1.0).abs() < 1e-12);
        assert!(a.positions().iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn rejects_two_dimensional_tori() {
        let g = TorusGeometry::new(2, 1.0).unwrap();
        assert!(grid_sample(&data(), 4, &g).is_err());
    }
}
