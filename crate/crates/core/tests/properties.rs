use proptest::prelude::*;

use tcs_core::kernels::{KernelPair, KernelSpec};
use tcs_core::kinetic::{functional_bounds, functionals_at, step_rk4, KineticModel, ParticleEnsemble};
use tcs_core::measures::{bl_distance_oracle, bounded_lipschitz_distance, phase_distance, PhasePoint, WeightedMeasure};
use tcs_core::{torus_distance, TorusGeometry};

const TOL: f64 = 1e-9;

fn atoms(dim: usize, max: usize) -> impl Strategy<Value = WeightedMeasure> {
    prop::collection::vec(
        (
            prop::collection::vec(0.0..1.0f64, dim),
            prop::collection::vec(-1.5..1.5f64, dim),
            0.3..2.5f64,
            0.05..1.5f64,
        ),
        1..=max,
    )
    .prop_map(move |atoms| {
        let mut mu = WeightedMeasure::empty(dim);
        for (x, v, theta, w) in atoms {
            mu.push(&PhasePoint::new(x, v, theta).unwrap(), w).unwrap();
        }
        mu
    })
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, dim)
}

fn scaled(mu: &WeightedMeasure, c: f64) -> WeightedMeasure {
    let w = mu.weights().iter().map(|w| c * w).collect();
    WeightedMeasure::from_parts(
        mu.dim(),
        mu.positions().to_vec(),
        mu.velocities().to_vec(),
        mu.temperatures().to_vec(),
        w,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn torus_distance_is_a_metric(x in point(2), y in point(2), z in point(2), shift in -3i32..3) {
        let g = TorusGeometry::new(2, 1.0).unwrap();
        let dxy = torus_distance(&x, &y, &g).unwrap();
        prop_assert!(dxy >= 0.0 && dxy <= g.diameter() + TOL);
        prop_assert!((dxy - torus_distance(&y, &x, &g).unwrap()).abs() <= TOL);
        let via = torus_distance(&x, &z, &g).unwrap() + torus_distance(&z, &y, &g).unwrap();
        prop_assert!(dxy <= via + TOL);
        let moved: Vec<f64> = x.iter().map(|c| c + shift as f64).collect();
        prop_assert!(torus_distance(&moved, &y, &g).unwrap() - dxy <= TOL);
        prop_assert!(torus_distance(&x, &moved, &g).unwrap() <= TOL);
    }

    #[test]
    fn bl_distance_metric_axioms(mu in atoms(1, 3), nu in atoms(1, 3), rho in atoms(1, 3)) {
        let g = TorusGeometry::default();
        let d = bounded_lipschitz_distance(&mu, &nu, &g).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(bounded_lipschitz_distance(&mu, &mu, &g).unwrap() <= TOL);
        prop_assert!((d - bounded_lipschitz_distance(&nu, &mu, &g).unwrap()).abs() <= TOL);
        let via = bounded_lipschitz_distance(&mu, &rho, &g).unwrap() + bounded_lipschitz_distance(&rho, &nu, &g).unwrap();
        prop_assert!(d <= via + TOL);
    }

    #[test]
    fn bl_distance_mass_bounds_and_homogeneity(mu in atoms(2, 3), nu in atoms(2, 3), c in 0.1..4.0f64) {
        let g = TorusGeometry::new(2, 1.0).unwrap();
        let d = bounded_lipschitz_distance(&mu, &nu, &g).unwrap();
        let (m, n) = (mu.total_mass(), nu.total_mass());
        prop_assert!(d >= (m - n).abs() - TOL);
        prop_assert!(d <= m + n + TOL);
        let dc = bounded_lipschitz_distance(&scaled(&mu, c), &scaled(&nu, c), &g).unwrap();
        prop_assert!((dc - c * d).abs() <= TOL * (1.0 + c * d));
    }

    #[test]
    fn bl_distance_matches_oracle(mu in atoms(2, 3), nu in atoms(2, 3)) {
        let g = TorusGeometry::new(2, 1.0).unwrap();
        let d = bounded_lipschitz_distance(&mu, &nu, &g).unwrap();
        let o = bl_distance_oracle(&mu, &nu, &g).unwrap();
        prop_assert!((d - o).abs() <= TOL, "lp {} oracle {}", d, o);
    }

    #[test]
    fn dirac_pair_closed_form(a in atoms(1, 1), b in atoms(1, 1)) {
        let g = TorusGeometry::default();
        let (za, zb) = (a.point(0), b.point(0));
        let unit = |z: &PhasePoint| WeightedMeasure::from_points(1, &[(z.clone(), 1.0)]).unwrap();
        let d = bounded_lipschitz_distance(&unit(&za), &unit(&zb), &g).unwrap();
        prop_assert!((d - phase_distance(&za, &zb, &g).min(2.0)).abs() <= TOL);
    }

    #[test]
    fn functionals_respect_sup_bounds(mu in atoms(2, 8), x in point(2), kappa in 0.1..3.0f64, beta in 0.2..3.0f64) {
        let kernels = KernelPair::from_specs(
            &KernelSpec::radial_rational(kappa, beta),
            &KernelSpec::constant(kappa),
        ).unwrap();
        let model = KineticModel::new(TorusGeometry::new(2, 1.0).unwrap(), kernels.clone());
        let sb = mu.support_bounds().unwrap();
        let fb = functional_bounds(&kernels, sb.max_speed, mu.total_mass(), sb.theta_min);
        let f = functionals_at(&x, &mu, &model).unwrap();
        let a = f.a.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!(a <= fb.a_sup + TOL);
        prop_assert!(f.b.abs() <= fb.b_sup + TOL);
        prop_assert!(f.rho_phi <= fb.rho_phi_sup + TOL && f.rho_phi >= 0.0);
        prop_assert!(f.rho_zeta <= fb.rho_zeta_sup + TOL && f.rho_zeta >= 0.0);
    }

    #[test]
    fn rk4_step_keeps_weights_and_temperature_floor(mu in atoms(1, 10), dt in 1e-4..5e-2f64) {
        let model = KineticModel::new(TorusGeometry::default(), KernelPair::from_specs(
            &KernelSpec::radial_rational(1.0, 1.0),
            &KernelSpec::radial_rational(1.0, 1.0),
        ).unwrap());
        let ens = ParticleEnsemble::new(mu.clone());
        let theta_m = mu.temperatures().iter().copied().fold(f64::INFINITY, f64::min);
        let next = step_rk4(&ens, dt, &model, theta_m / 2.0).unwrap();
        prop_assert_eq!(next.measure.weights(), mu.weights());
        prop_assert_eq!(next.measure.total_mass(), mu.total_mass());
        let min = next.measure.temperatures().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= theta_m - 1e-8, "min theta {} < {}", min, theta_m);
    }
}
