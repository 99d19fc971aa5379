//! Bounded-Lipschitz distance as an uncapacitated min-cost flow.
//!
//! The LP `max sum_i c_i g_i` subject to `|g_i| <= 1` and
//! `|g_i - g_j| <= d_ij` is the dual of a transshipment problem on the merged
//! support plus a ground node: node `i` supplies `c_i = mu_i - nu_i`, arcs
//! between atoms cost `d_ij` and arcs to or from ground cost 1 (mass creation
//! or destruction). Successive shortest paths with node potentials solve it;
//! the final potentials, shifted so the ground sits at zero, are the optimal
//! test function.

use super::{BlProblem, BlSolution, DistanceSolver, WeightedMeasure, PRUNE_DISTANCE};
use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;

#[derive(Debug, Clone, Copy)]
pub struct MinCostFlowSolver {
    pub capacity: usize,
}

impl MinCostFlowSolver {
    pub const NAME: &'static str = "min-cost-flow";
    pub const DEFAULT_CAPACITY: usize = 1024;

    pub fn with_capacity(capacity: usize) -> Self {
        Self { capacity }
    }
}

impl Default for MinCostFlowSolver {
    fn default() -> Self {
        Self::with_capacity(Self::DEFAULT_CAPACITY)
    }
}

impl DistanceSolver for MinCostFlowSolver {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn capacity(&self) -> usize {
        self.capacity
    }

    fn solve(
        &self,
        mu: &WeightedMeasure,
        nu: &WeightedMeasure,
        geom: &TorusGeometry,
    ) -> Result<BlSolution> {
        let problem = BlProblem::assemble(mu, nu, geom)?;
        if problem.len() > self.capacity {
            return Err(Error::Capacity {
                size: problem.len(),
                capacity: self.capacity,
            });
        }
        solve_transshipment(&problem, geom)
    }
}

/// Dense residual network on `n` atoms plus ground.
struct Network {
    nodes: usize,
    /// Arc costs, `INFINITY` for pruned arcs.
    cost: Vec<f64>,
    flow: Vec<f64>,
}

impl Network {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nodes + j
    }
}

fn solve_transshipment(problem: &BlProblem, geom: &TorusGeometry) -> Result<BlSolution> {
    let n = problem.len();
    let ground = n;
    let nodes = n + 1;
    let scale: f64 = problem.mass_diff.iter().map(|c| c.abs()).sum();

    if scale == 0.0 {
        return Ok(BlSolution {
            distance: 0.0,
            support: problem.points(),
            mass_diff: problem.mass_diff.clone(),
            test_function: vec![0.0; n],
            primal_cost: Some(0.0),
        });
    }

    let mut net = Network {
        nodes,
        cost: vec![f64::INFINITY; nodes * nodes],
        flow: vec![0.0; nodes * nodes],
    };
    for i in 0..n {
        for j in (i + 1)..n {
            let d = problem.distance(geom, i, j);
            if d < PRUNE_DISTANCE {
                let (a, b) = (net.idx(i, j), net.idx(j, i));
                net.cost[a] = d;
                net.cost[b] = d;
            }
        }
        let (a, b) = (net.idx(i, ground), net.idx(ground, i));
        net.cost[a] = 1.0;
        net.cost[b] = 1.0;
    }

    let mut excess: Vec<f64> = problem.mass_diff.clone();
    excess.push(-problem.mass_diff.iter().sum::<f64>());

    let tol = 1e-14 * scale;
    let mut potential = vec![0.0; nodes];
    let mut dist = vec![0.0; nodes];
    let mut done = vec![false; nodes];
    // predecessor node and whether the arc used cancels existing flow
    let mut pred: Vec<Option<(usize, bool)>> = vec![None; nodes];

    let max_rounds = 64 * nodes * nodes;
    let mut rounds = 0;
    loop {
        if !excess.iter().any(|&b| b > tol) {
            break;
        }
        rounds += 1;
        if rounds > max_rounds {
            return Err(Error::State(format!(
                "min-cost flow did not converge after {max_rounds} augmentations"
            )));
        }

        for k in 0..nodes {
            dist[k] = if excess[k] > tol { 0.0 } else { f64::INFINITY };
            done[k] = false;
            pred[k] = None;
        }
        for _ in 0..nodes {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for k in 0..nodes {
                if !done[k] && dist[k] < best {
                    best = dist[k];
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for w in 0..nodes {
                if done[w] || w == u {
                    continue;
                }
                let forward = net.cost[net.idx(u, w)];
                let back_flow = net.flow[net.idx(w, u)];
                let (arc_cost, cancels) = if back_flow > 0.0 {
                    (-net.cost[net.idx(w, u)], true)
                } else {
                    (forward, false)
                };
                if !arc_cost.is_finite() {
                    continue;
                }
                let reduced = (arc_cost + potential[u] - potential[w]).max(0.0);
                let cand = dist[u] + reduced;
                if cand < dist[w] {
                    dist[w] = cand;
                    pred[w] = Some((u, cancels));
                }
            }
        }

        let sink = (0..nodes)
            .filter(|&k| excess[k] < -tol && dist[k].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
            .ok_or_else(|| Error::State("min-cost flow: no reachable deficit node".into()))?;

        for k in 0..nodes {
            if dist[k].is_finite() {
                potential[k] += dist[k];
            }
        }

        // bottleneck along the path back to a source
        let mut delta = -excess[sink];
        let mut w = sink;
        while let Some((u, cancels)) = pred[w] {
            if cancels {
                delta = delta.min(net.flow[net.idx(w, u)]);
            }
            w = u;
        }
        let source = w;
        delta = delta.min(excess[source]);

        let mut w = sink;
        while let Some((u, cancels)) = pred[w] {
            if cancels {
                let a = net.idx(w, u);
                net.flow[a] -= delta;
                if net.flow[a] <= tol {
                    net.flow[a] = 0.0;
                }
            } else {
                let a = net.idx(u, w);
                net.flow[a] += delta;
            }
            w = u;
        }
        excess[source] -= delta;
        excess[sink] += delta;
    }

    let test_function: Vec<f64> = (0..n)
        .map(|i| (potential[ground] - potential[i]).clamp(-1.0, 1.0))
        .collect();
    let dual: f64 = problem
        .mass_diff
        .iter()
        .zip(&test_function)
        .map(|(c, g)| c * g)
        .sum();
    let primal: f64 = net
        .flow
        .iter()
        .zip(&net.cost)
        .filter(|(f, _)| **f > 0.0)
        .map(|(f, c)| f * c)
        .sum();

    Ok(BlSolution {
        distance: dual.max(0.0),
        support: problem.points(),
        mass_diff: problem.mass_diff.clone(),
        test_function,
        primal_cost: Some(primal),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{bl_distance_oracle, phase_distance};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dirac(x: f64, v: f64, theta: f64, w: f64) -> WeightedMeasure {
        WeightedMeasure::from_parts(1, vec![x], vec![v], vec![theta], vec![w]).unwrap()
    }

    fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> WeightedMeasure {
        WeightedMeasure::from_parts(
            1,
            (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..n).map(|_| rng.random_range(0.5..2.0)).collect(),
            (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_dirac_closed_form() {
        let g = TorusGeometry::default();
        let solver = MinCostFlowSolver::default();
        let near = solver
            .distance(&dirac(0.0, 0.0, 1.0, 1.0), &dirac(0.1, 0.3, 1.1, 1.0), &g)
            .unwrap();
        assert_abs_diff_eq!(near, 0.5, epsilon = 1e-12);
        let far = solver
            .distance(&dirac(0.0, 0.0, 1.0, 1.0), &dirac(0.5, 2.5, 3.0, 1.0), &g)
            .unwrap();
        assert_abs_diff_eq!(far, 2.0, epsilon = 1e-12);
        let same_point = solver
            .distance(&dirac(0.3, 0.1, 1.0, 1.0), &dirac(0.3, 0.1, 1.0, 0.4), &g)
            .unwrap();
        assert_abs_diff_eq!(same_point, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn capacity_is_enforced() {
        let g = TorusGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mu = random_measure(&mut rng, 6);
        let nu = random_measure(&mut rng, 6);
        let err = MinCostFlowSolver::with_capacity(8).distance(&mu, &nu, &g).unwrap_err();
        assert!(matches!(err, Error::Capacity { size: 12, capacity: 8 }));
    }

    #[test]
    fn certificate_is_feasible_and_tight() {
        let g = TorusGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [1, 3, 10, 40] {
            let mu = random_measure(&mut rng, n);
            let nu = random_measure(&mut rng, n + 2);
            let sol = MinCostFlowSolver::default().solve(&mu, &nu, &g).unwrap();
            for (i, gi) in sol.test_function.iter().enumerate() {
                assert!(gi.abs() <= 1.0 + 1e-9);
                for (j, gj) in sol.test_function.iter().enumerate() {
                    let d = phase_distance(&sol.support[i], &sol.support[j], &g);
                    assert!((gi - gj).abs() <= d + 1e-9, "pair ({i},{j})");
                }
            }
            let objective: f64 = sol.mass_diff.iter().zip(&sol.test_function).map(|(c, g)| c * g).sum();
            assert_abs_diff_eq!(objective, sol.distance, epsilon = 1e-12);
            assert_abs_diff_eq!(sol.primal_cost.unwrap(), sol.distance, epsilon = 1e-9);
        }
    }

    #[test]
    fn agrees_with_oracle_on_small_instances() {
        let g = TorusGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let a = rng.random_range(1..=3);
            let b = rng.random_range(1..=3);
            let mu = random_measure(&mut rng, a);
            let nu = random_measure(&mut rng, b);
            let lp = bounded_lp(&mu, &nu, &g);
            let oracle = bl_distance_oracle(&mu, &nu, &g).unwrap();
            assert_abs_diff_eq!(lp, oracle, epsilon = 1e-9);
        }
    }

    fn bounded_lp(mu: &WeightedMeasure, nu: &WeightedMeasure, g: &TorusGeometry) -> f64 {
        MinCostFlowSolver::default().distance(mu, nu, g).unwrap()
    }

    #[test]
    fn larger_instances_stay_symmetric() {
        let g = TorusGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mu = random_measure(&mut rng, 128);
        let nu = random_measure(&mut rng, 128);
        let d1 = bounded_lp(&mu, &nu, &g);
        let d2 = bounded_lp(&nu, &mu, &g);
        assert_abs_diff_eq!(d1, d2, epsilon = 1e-10);
        assert!(d1 <= mu.total_mass() + nu.total_mass());
    }
}
