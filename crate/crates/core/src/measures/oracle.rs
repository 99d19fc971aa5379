//! Reference value for the bounded-Lipschitz LP by brute-force vertex
//! enumeration. Exponential in the support size; only meant for checking the
//! production solver on tiny instances.
//!
//! Every vertex of `{|g_i| <= 1, |g_i - g_j| <= d_ij}` is pinned down by `n`
//! independent active constraints. Viewing a box constraint as an edge to a
//! ground node (at `g = 0`, length 1) and a pairwise constraint as an edge of
//! length `d_ij`, independent sets of `n` constraints are exactly spanning
//! trees on the `n + 1` nodes. Enumerating rooted trees with a sign per edge
//! therefore visits every vertex; the best feasible one is the optimum.

use super::{phase_distance_parts, BlSolution, DistanceSolver, PhasePoint, WeightedMeasure};
use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;

/// Largest union support (atoms of both measures, unmerged) the oracle accepts.
pub const ORACLE_CAPACITY: usize = 6;

const FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default)]
pub struct VertexEnumerationOracle;

impl VertexEnumerationOracle {
    pub const NAME: &'static str = "vertex-enumeration";
}

impl DistanceSolver for VertexEnumerationOracle {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn capacity(&self) -> usize {
        ORACLE_CAPACITY
    }

    fn solve(
        &self,
        mu: &WeightedMeasure,
        nu: &WeightedMeasure,
        geom: &TorusGeometry,
    ) -> Result<BlSolution> {
        enumerate(mu, nu, geom)
    }
}

pub fn bl_distance_oracle(mu: &WeightedMeasure, nu: &WeightedMeasure, geom: &TorusGeometry) -> Result<f64> {
    Ok(enumerate(mu, nu, geom)?.distance)
}

fn enumerate(mu: &WeightedMeasure, nu: &WeightedMeasure, geom: &TorusGeometry) -> Result<BlSolution> {
    let n = mu.len() + nu.len();
    if n > ORACLE_CAPACITY {
        return Err(Error::Capacity {
            size: n,
            capacity: ORACLE_CAPACITY,
        });
    }
    if mu.dim() != geom.dim || nu.dim() != geom.dim {
        return Err(Error::Domain("measure and geometry dimensions differ".into()));
    }
    let atoms: Vec<(&[f64], &[f64], f64)> = (0..mu.len())
        .map(|i| mu.atom(i))
        .chain((0..nu.len()).map(|i| nu.atom(i)))
        .collect();
    let c: Vec<f64> = mu
        .weights()
        .iter()
        .copied()
        .chain(nu.weights().iter().map(|w| -w))
        .collect();
    let support: Vec<PhasePoint> = atoms
        .iter()
        .map(|(x, v, theta)| PhasePoint {
            x: x.to_vec(),
            v: v.to_vec(),
            theta: *theta,
        })
        .collect();
    if n == 0 {
        return Ok(BlSolution {
            distance: 0.0,
            support,
            mass_diff: c,
            test_function: Vec::new(),
            primal_cost: None,
        });
    }

    let ground = n;
    // edge length between node i and node j, ground included
    let len = |i: usize, j: usize| -> f64 {
        if i == ground || j == ground {
            1.0
        } else {
            phase_distance_parts(geom, atoms[i], atoms[j])
        }
    };
    let dist: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| len(i, j)).collect()).collect();

    let mut best = f64::NEG_INFINITY;
    let mut best_g = vec![0.0; n];
    let mut g = vec![0.0; n + 1];
    // parent choices for node i: every other node including ground
    let mut choice = vec![0usize; n];
    let parent_of = |i: usize, k: usize| if k < i { k } else { k + 1 };
    let mut order = Vec::with_capacity(n);

    'trees: loop {
        let parent: Vec<usize> = (0..n).map(|i| parent_of(i, choice[i])).collect();
        if let Some(o) = topological_order(&parent, ground) {
            order.clear();
            order.extend(o);
            let edge: Vec<f64> = (0..n).map(|i| len(i, parent[i])).collect();
            for signs in 0u32..(1 << n) {
                g[ground] = 0.0;
                for &i in &order {
                    let s = if signs >> i & 1 == 1 { 1.0 } else { -1.0 };
                    g[i] = g[parent[i]] + s * edge[i];
                }
                let obj: f64 = (0..n).map(|i| c[i] * g[i]).sum();
                if obj > best && feasible(&g[..n], &dist) {
                    best = obj;
                    best_g.copy_from_slice(&g[..n]);
                }
            }
        }
        // next parent assignment (odometer over n choices per node)
        for i in 0..n {
            choice[i] += 1;
            if choice[i] < n {
                continue 'trees;
            }
            choice[i] = 0;
        }
        break;
    }

    Ok(BlSolution {
        distance: best.max(0.0),
        support,
        mass_diff: c,
        test_function: best_g,
        primal_cost: None,
    })
}

/// Nodes ordered so each comes after its parent, or `None` when the parent
/// map has a cycle (does not reach ground).
fn topological_order(parent: &[usize], ground: usize) -> Option<Vec<usize>> {
    let n = parent.len();
    let mut depth = vec![usize::MAX; n];
    for start in 0..n {
        let mut steps = 0;
        let mut k = start;
        while k != ground {
            k = parent[k];
            steps += 1;
            if steps > n {
                return None;
            }
        }
        depth[start] = steps;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| depth[i]);
    Some(order)
}

fn feasible(g: &[f64], dist: &[Vec<f64>]) -> bool {
    let n = g.len();
    for i in 0..n {
        if g[i].abs() > 1.0 + FEAS_TOL {
            return false;
        }
        for j in (i + 1)..n {
            if (g[i] - g[j]).abs() > dist[i][j] + FEAS_TOL {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dirac(x: f64, v: f64, theta: f64, w: f64) -> WeightedMeasure {
        WeightedMeasure::from_parts(1, vec![x], vec![v], vec![theta], vec![w]).unwrap()
    }

    #[test]
    fn two_point_polytope() {
        let g = TorusGeometry::default();
        for (gap, expected) in [(0.5, 0.5), (1.5, 1.5), (5.0, 2.0)] {
            let d = bl_distance_oracle(
                &dirac(0.0, 0.0, 1.0, 1.0),
                &dirac(0.0, gap, 1.0, 1.0),
                &g,
            )
            .unwrap();
            assert_abs_diff_eq!(d, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let g = TorusGeometry::default();
        let mu = WeightedMeasure::from_parts(
            1,
            vec![0.1, 0.7, 0.4],
            vec![0.2, -0.3, 0.0],
            vec![1.0, 2.0, 1.5],
            vec![0.3, 0.2, 0.5],
        )
        .unwrap();
        assert_abs_diff_eq!(bl_distance_oracle(&mu, &mu, &g).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_large_supports() {
        let g = TorusGeometry::default();
        let mu = WeightedMeasure::from_parts(1, vec![0.0; 4], vec![0.0; 4], vec![1.0; 4], vec![1.0; 4]).unwrap();
        assert!(matches!(
            bl_distance_oracle(&mu, &mu, &g),
            Err(Error::Capacity { size: 8, .. })
        ));
    }

    #[test]
    fn detects_cycles() {
        assert!(topological_order(&[1, 0], 2).is_none());
        assert_eq!(topological_order(&[2, 0], 2), Some(vec![0, 1]));
    }
}
