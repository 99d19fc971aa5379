use serde::Serialize;

use super::{phase_distance_parts, MinCostFlowSolver, PhasePoint, VertexEnumerationOracle, WeightedMeasure};
use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;

/// Atoms closer than this in the phase metric are merged before solving.
pub const CO_LOCATION_TOL: f64 = 1e-12;

/// Pairwise constraints `|g_i - g_j| <= d_ij` with `d_ij >= 2` are implied by
/// the box `|g| <= 1` and are dropped.
pub const PRUNE_DISTANCE: f64 = 2.0;

/// Backend computing `sup_{|g| <= 1, Lip(g) <= 1} |<mu - nu, g>|` exactly.
pub trait DistanceSolver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Largest merged support the backend accepts.
    fn capacity(&self) -> usize;

    fn solve(
        &self,
        mu: &WeightedMeasure,
        nu: &WeightedMeasure,
        geom: &TorusGeometry,
    ) -> Result<BlSolution>;

    fn distance(&self, mu: &WeightedMeasure, nu: &WeightedMeasure, geom: &TorusGeometry) -> Result<f64> {
        Ok(self.solve(mu, nu, geom)?.distance)
    }
}

/// Optimal test function on the merged support together with the optimum.
#[derive(Debug, Clone)]
pub struct BlSolution {
    pub distance: f64,
    pub support: Vec<PhasePoint>,
    /// `mu - nu` on each support point.
    pub mass_diff: Vec<f64>,
    /// Optimal `g` on each support point.
    pub test_function: Vec<f64>,
    /// Cost of the optimal partial transport plan, when the backend has one.
    pub primal_cost: Option<f64>,
}

/// Union support of two measures with co-located atoms merged.
#[derive(Debug, Clone)]
pub struct BlProblem {
    pub dim: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub mass_diff: Vec<f64>,
}

impl BlProblem {
    pub fn assemble(mu: &WeightedMeasure, nu: &WeightedMeasure, geom: &TorusGeometry) -> Result<Self> {
        if mu.dim() != nu.dim() || mu.dim() != geom.dim {
            return Err(Error::Domain(format!(
                "measure dimensions {} and {} do not match geometry dimension {}",
                mu.dim(),
                nu.dim(),
                geom.dim
            )));
        }
        let mut p = Self {
            dim: geom.dim,
            x: Vec::new(),
            v: Vec::new(),
            theta: Vec::new(),
            mass_diff: Vec::new(),
        };
        for (m, sign) in [(mu, 1.0), (nu, -1.0)] {
            for i in 0..m.len() {
                p.insert(geom, m.atom(i), sign * m.weight(i));
            }
        }
        Ok(p)
    }

    fn insert(&mut self, geom: &TorusGeometry, atom: (&[f64], &[f64], f64), mass: f64) {
        let existing = (0..self.len())
            .find(|&k| phase_distance_parts(geom, self.atom(k), atom) < CO_LOCATION_TOL);
        match existing {
            Some(k) => self.mass_diff[k] += mass,
            None => {
                self.x.extend_from_slice(atom.0);
                self.v.extend_from_slice(atom.1);
                self.theta.push(atom.2);
                self.mass_diff.push(mass);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.mass_diff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass_diff.is_empty()
    }

    #[inline]
    pub fn atom(&self, k: usize) -> (&[f64], &[f64], f64) {
        let d = self.dim;
        (&self.x[k * d..(k + 1) * d], &self.v[k * d..(k + 1) * d], self.theta[k])
    }

    pub fn distance(&self, geom: &TorusGeometry, i: usize, j: usize) -> f64 {
        phase_distance_parts(geom, self.atom(i), self.atom(j))
    }

    pub fn points(&self) -> Vec<PhasePoint> {
        (0..self.len())
            .map(|k| {
                let (x, v, theta) = self.atom(k);
                PhasePoint {
                    x: x.to_vec(),
                    v: v.to_vec(),
                    theta,
                }
            })
            .collect()
    }
}

/// Distance backends by name. The first registered entry is the default.
pub struct SolverRegistry {
    solvers: Vec<Box<dyn DistanceSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            solvers: Vec::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(MinCostFlowSolver::default());
        reg.register(VertexEnumerationOracle);
        reg
    }

    pub fn register<S: DistanceSolver + 'static>(&mut self, solver: S) {
        self.solvers.retain(|s| s.name() != solver.name());
        self.solvers.push(Box::new(solver));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.iter().map(|s| s.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn DistanceSolver> {
        self.solvers
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                registry: "distance solver",
                name: name.to_owned(),
                available: self.names().join(", "),
            })
    }

    pub fn default_solver(&self) -> &dyn DistanceSolver {
        self.solvers[0].as_ref()
    }
}

/// Exact bounded-Lipschitz distance with the default LP backend.
pub fn bounded_lipschitz_distance(
    mu: &WeightedMeasure,
    nu: &WeightedMeasure,
    geom: &TorusGeometry,
) -> Result<f64> {
    MinCostFlowSolver::default().distance(mu, nu, geom)
}

/// Result of reducing a measure to at most `capacity` atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subsample {
    pub original_size: usize,
    pub subsample_size: usize,
    /// Largest phase distance from a dropped atom to the atom that absorbed it.
    pub max_displacement: f64,
}

/// Greedy farthest-point selection of `capacity` centers; every atom's weight
/// moves to its nearest center, so the total mass is preserved.
pub fn farthest_point_subsample(
    mu: &WeightedMeasure,
    capacity: usize,
    geom: &TorusGeometry,
) -> Result<(WeightedMeasure, Subsample)> {
    if capacity == 0 {
        return Err(Error::Config("subsample capacity must be positive".into()));
    }
    let n = mu.len();
    if n <= capacity {
        return Ok((
            mu.clone(),
            Subsample {
                original_size: n,
                subsample_size: n,
                max_displacement: 0.0,
            },
        ));
    }
    // start from the heaviest atom (lowest index on ties) for determinism
    let first = (0..n).fold(0, |best, i| if mu.weight(i) > mu.weight(best) { i } else { best });
    let mut centers = vec![first];
    let mut nearest = vec![first; n];
    let mut gap: Vec<f64> = (0..n)
        .map(|i| phase_distance_parts(geom, mu.atom(i), mu.atom(first)))
        .collect();
    while centers.len() < capacity {
        let far = (0..n).fold(0, |best, i| if gap[i] > gap[best] { i } else { best });
        centers.push(far);
        for i in 0..n {
            let d = phase_distance_parts(geom, mu.atom(i), mu.atom(far));
            if d < gap[i] {
                gap[i] = d;
                nearest[i] = far;
            }
        }
    }
    let mut weights = vec![0.0; n];
    for i in 0..n {
        weights[nearest[i]] += mu.weight(i);
    }
    let mut out = WeightedMeasure::empty(mu.dim());
    for &c in &centers {
        out.push(&mu.point(c), weights[c])?;
    }
    let max_displacement = gap.iter().copied().fold(0.0, f64::max);
    Ok((
        out,
        Subsample {
            original_size: n,
            subsample_size: capacity,
            max_displacement,
        },
    ))
}
