//! Atomic nonnegative measures on phase space `X = T^d x R^d x R_+`.
//!
//! The phase metric is the l1 combination of the torus distance in `x`, the
//! Euclidean distance in `v` and the absolute difference in `theta`; it is the
//! metric in which the bounded-Lipschitz test functions are measured.

mod distance;
mod flow;
mod oracle;

use std::io::Write;
use std::path::Path;

pub use distance::{
    bounded_lipschitz_distance, farthest_point_subsample, BlProblem, BlSolution, DistanceSolver,
    SolverRegistry, Subsample, CO_LOCATION_TOL, PRUNE_DISTANCE,
};
pub use flow::MinCostFlowSolver;
pub use oracle::{bl_distance_oracle, VertexEnumerationOracle, ORACLE_CAPACITY};

use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;
use crate::hydro::HydroState;

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub theta: f64,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, v: Vec<f64>, theta: f64) -> Result<Self> {
        let p = Self { x, v, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.v.len() {
            return Err(Error::Domain(format!(
                "phase point has x of dimension {} but v of dimension {}",
                self.x.len(),
                self.v.len()
            )));
        }
        if self.x.iter().chain(&self.v).any(|c| !c.is_finite()) || !self.theta.is_finite() {
            return Err(Error::Domain("phase point has non-finite coordinates".into()));
        }
        if self.theta <= 0.0 {
            return Err(Error::State(format!(
                "phase point temperature must be positive, got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub(crate) fn phase_distance_parts(
    geom: &TorusGeometry,
    (x1, v1, t1): (&[f64], &[f64], f64),
    (x2, v2, t2): (&[f64], &[f64], f64),
) -> f64 {
    geom.distance_unchecked(x1, x2) + euclidean(v1, v2) + (t1 - t2).abs()
}

/// `torus(x1, x2) + |v1 - v2| + |theta1 - theta2|`.
pub fn phase_distance(z1: &PhasePoint, z2: &PhasePoint, geom: &TorusGeometry) -> f64 {
    phase_distance_parts(
        geom,
        (&z1.x, &z1.v, z1.theta),
        (&z2.x, &z2.v, z2.theta),
    )
}

/// Finite atomic measure stored as structure-of-arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMeasure {
    dim: usize,
    x: Vec<f64>,
    v: Vec<f64>,
    theta: Vec<f64>,
    weight: Vec<f64>,
}

/// `(max |v|, min theta, max theta)` over the atoms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SupportBounds {
    pub max_speed: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl SupportBounds {
    /// Smallest bounds covering both.
    pub fn union(&self, other: &SupportBounds) -> SupportBounds {
        SupportBounds {
            max_speed: self.max_speed.max(other.max_speed),
            theta_min: self.theta_min.min(other.theta_min),
            theta_max: self.theta_max.max(other.theta_max),
        }
    }
}

impl WeightedMeasure {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            x: Vec::new(),
            v: Vec::new(),
            theta: Vec::new(),
            weight: Vec::new(),
        }
    }

    /// Build from flat arrays (`x` and `v` hold `dim` entries per atom).
    pub fn from_parts(
        dim: usize,
        x: Vec<f64>,
        v: Vec<f64>,
        theta: Vec<f64>,
        weight: Vec<f64>,
    ) -> Result<Self> {
        let n = weight.len();
        if dim == 0 || x.len() != n * dim || v.len() != n * dim || theta.len() != n {
            return Err(Error::Domain(format!(
                "inconsistent measure arrays: dim {dim}, {} x, {} v, {} theta, {n} weights",
                x.len(),
                v.len(),
                theta.len()
            )));
        }
        let m = Self {
            dim,
            x,
            v,
            theta,
            weight,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_points(dim: usize, atoms: &[(PhasePoint, f64)]) -> Result<Self> {
        let mut m = Self::empty(dim);
        for (p, w) in atoms {
            m.push(p, *w)?;
        }
        Ok(m)
    }

    pub fn push(&mut self, p: &PhasePoint, weight: f64) -> Result<()> {
        p.validate()?;
        if p.dim() != self.dim {
            return Err(Error::Domain(format!(
                "atom of dimension {} pushed into a measure of dimension {}",
                p.dim(),
                self.dim
            )));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::Domain(format!(
                "atom weights must be finite and nonnegative, got {weight}"
            )));
        }
        self.x.extend_from_slice(&p.x);
        self.v.extend_from_slice(&p.v);
        self.theta.push(p.theta);
        self.weight.push(weight);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.iter().chain(&self.v).chain(&self.theta).any(|c| !c.is_finite()) {
            return Err(Error::Domain("measure has non-finite coordinates".into()));
        }
        if let Some(i) = self.theta.iter().position(|&t| t <= 0.0) {
            return Err(Error::State(format!(
                "atom {i} has non-positive temperature {}",
                self.theta[i]
            )));
        }
        if let Some(i) = self.weight.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain(format!(
                "atom {i} has invalid weight {}",
                self.weight[i]
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn v(&self, i: usize) -> &[f64] {
        &self.v[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn theta(&self, i: usize) -> f64 {
        self.theta[i]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weight[i]
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    pub fn velocities(&self) -> &[f64] {
        &self.v
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.theta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.x, &mut self.v, &mut self.theta)
    }

    pub fn point(&self, i: usize) -> PhasePoint {
        PhasePoint {
            x: self.x(i).to_vec(),
            v: self.v(i).to_vec(),
            theta: self.theta(i),
        }
    }

    #[inline]
    pub(crate) fn atom(&self, i: usize) -> (&[f64], &[f64], f64) {
        (self.x(i), self.v(i), self.theta(i))
    }

    pub fn total_mass(&self) -> f64 {
        self.weight.iter().sum()
    }

    pub fn support_bounds(&self) -> Result<SupportBounds> {
        if self.is_empty() {
            return Err(Error::State("support bounds of an empty measure".into()));
        }
        let max_speed = (0..self.len())
            .map(|i| self.v(i).iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let theta_min = self.theta.iter().copied().fold(f64::INFINITY, f64::min);
        let theta_max = self.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(SupportBounds {
            max_speed,
            theta_min,
            theta_max,
        })
    }

    /// Integral of `g` against the measure.
    pub fn integrate(&self, mut g: impl FnMut(&[f64], &[f64], f64) -> f64) -> f64 {
        (0..self.len())
            .map(|i| self.weight(i) * g(self.x(i), self.v(i), self.theta(i)))
            .sum()
    }

    /// Same measure with positions reduced into the fundamental domain.
    pub fn wrapped(&self, geom: &TorusGeometry) -> Self {
        let mut m = self.clone();
        m.x.iter_mut().for_each(|c| *c = geom.wrap(*c));
        m
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        self.write_csv_to(&mut out)
            .map_err(|e| Error::io(path, e))?;
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Header `x1..xd,v1..vd,theta,weight`, one atom per row.
    pub fn write_csv_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        header.extend((1..=self.dim).map(|k| format!("v{k}")));
        header.push("theta".into());
        header.push("weight".into());
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.x(i).iter().map(|c| c.to_string()).collect();
            row.extend(self.v(i).iter().map(|c| c.to_string()));
            row.push(self.theta(i).to_string());
            row.push(self.weight(i).to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
                ),
                _ => Error::parse(path, e),
            })?;
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::parse(path, e))?
            .iter()
            .map(str::to_owned)
            .collect();
        if header.len() < 4 || header.len() % 2 != 0 {
            return Err(Error::parse(
                path,
                format!("expected header x1..xd,v1..vd,theta,weight, got `{}`", header.join(",")),
            ));
        }
        let dim = (header.len() - 2) / 2;
        let mut expected: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
        expected.extend((1..=dim).map(|k| format!("v{k}")));
        expected.push("theta".into());
        expected.push("weight".into());
        if header != expected {
            return Err(Error::parse(
                path,
                format!(
                    "expected header `{}`, got `{}`",
                    expected.join(","),
                    header.join(",")
                ),
            ));
        }
        let mut m = Self::empty(dim);
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::parse(path, e))?;
            let vals: Vec<f64> = record
                .iter()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(path, format!("row {}: {e}", row + 1)))?;
            let p = PhasePoint {
                x: vals[..dim].to_vec(),
                v: vals[dim..2 * dim].to_vec(),
                theta: vals[2 * dim],
            };
            m.push(&p, vals[2 * dim + 1])
                .map_err(|e| Error::parse(path, format!("row {}: {e}", row + 1)))?;
        }
        Ok(m)
    }
}

pub fn total_mass(mu: &WeightedMeasure) -> f64 {
    mu.total_mass()
}

pub fn support_bounds(mu: &WeightedMeasure) -> Result<SupportBounds> {
    mu.support_bounds()
}

/// Mono-kinetic lift `rho dx (x) delta_u (x) delta_e` of a 1D grid state: one
/// atom per cell center carrying the cell mass.
pub fn lift_monokinetic(h: &HydroState) -> Result<WeightedMeasure> {
    let m = h.cells();
    let dx = h.cell_width();
    if let Some(j) = h.rho.iter().position(|&r| !(r >= 0.0)) {
        return Err(Error::State(format!(
            "cannot lift: density {} < 0 in cell {j}",
            h.rho[j]
        )));
    }
    if let Some(j) = h.e.iter().position(|&e| !(e > 0.0)) {
        return Err(Error::State(format!(
            "cannot lift: temperature {} <= 0 in cell {j}",
            h.e[j]
        )));
    }
    let x: Vec<f64> = (0..m).map(|j| h.cell_center(j)).collect();
    let weight: Vec<f64> = h.rho.iter().map(|r| r * dx).collect();
    WeightedMeasure::from_parts(1, x, h.u.clone(), h.e.clone(), weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p1(x: f64, v: f64, theta: f64) -> PhasePoint {
        PhasePoint::new(vec![x], vec![v], theta).unwrap()
    }

    #[test]
    fn phase_distance_examples() {
        let g = TorusGeometry::default();
        let a = p1(0.1, 0.5, 1.0);
        assert_eq!(phase_distance(&a, &a, &g), 0.0);
        assert_abs_diff_eq!(
            phase_distance(&a, &p1(0.3, 0.8, 1.1), &g),
            0.6,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            phase_distance(&p1(0.9, 0.0, 1.0), &p1(0.1, 0.0, 1.0), &g),
            0.2,
            epsilon = 1e-14
        );
        let g2 = TorusGeometry::new(2, 1.0).unwrap();
        let b = PhasePoint::new(vec![0.0, 0.0], vec![0.0, 0.0], 1.0).unwrap();
        let c = PhasePoint::new(vec![0.5, 0.9], vec![3.0, 4.0], 2.0).unwrap();
        assert_abs_diff_eq!(phase_distance(&b, &c, &g2), 0.6 + 5.0 + 1.0, epsilon = 1e-14);
    }

    #[test]
    fn masses_and_bounds() {
        let mut m = WeightedMeasure::empty(1);
        assert_eq!(total_mass(&m), 0.0);
        assert!(support_bounds(&m).is_err());
        for (w, v, t) in [(0.2, -2.0, 1.0), (0.3, 1.0, 5.0), (0.1, 0.3, 2.0)] {
            m.push(&p1(0.0, v, t), w).unwrap();
        }
        assert_abs_diff_eq!(total_mass(&m), 0.6, epsilon = 1e-15);
        let b = support_bounds(&m).unwrap();
        assert_eq!((b.max_speed, b.theta_min, b.theta_max), (2.0, 1.0, 5.0));

        let mut single = WeightedMeasure::empty(1);
        single.push(&p1(0.0, 0.3, 2.0), 1.0).unwrap();
        let b = support_bounds(&single).unwrap();
        assert_eq!((b.max_speed, b.theta_min, b.theta_max), (0.3, 2.0, 2.0));
    }

    #[test]
    fn rejects_invalid_atoms() {
        assert!(PhasePoint::new(vec![0.0], vec![0.0], 0.0).is_err());
        assert!(PhasePoint::new(vec![f64::NAN], vec![0.0], 1.0).is_err());
        let mut m = WeightedMeasure::empty(1);
        assert!(m.push(&p1(0.0, 0.0, 1.0), -1.0).is_err());
        assert!(WeightedMeasure::from_parts(1, vec![0.0], vec![0.0], vec![1.0], vec![]).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = WeightedMeasure::from_parts(
            2,
            vec![0.1, 0.2, 1.0 / 3.0, -0.7],
            vec![1e-17, 2.5, -3.25, 0.0],
            vec![1.5, 2.0 / 7.0],
            vec![0.25, 0.75],
        )
        .unwrap();
        m.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x1,x2,v1,v2,theta,weight\n"));
        assert_eq!(WeightedMeasure::read_csv(&path).unwrap(), m);
    }

    #[test]
    fn csv_rejects_bad_headers_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x1,v1,temp,weight\n0,0,1,1\n").unwrap();
        assert!(matches!(WeightedMeasure::read_csv(&path), Err(Error::Parse { .. })));
        std::fs::write(&path, "x1,v1,theta,weight\n0,0,-1,1\n").unwrap();
        assert!(WeightedMeasure::read_csv(&path).is_err());
        assert!(matches!(
            WeightedMeasure::read_csv(&dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn lift_examples() {
        let geom = TorusGeometry::default();
        let uniform = HydroState::new(geom, vec![1.0; 4], vec![0.0; 4], vec![1.0; 4]).unwrap();
        let mu = lift_monokinetic(&uniform).unwrap();
        assert_eq!(mu.len(), 4);
        assert_eq!(mu.weights(), &[0.25; 4]);
        assert_eq!(mu.positions(), &[0.125, 0.375, 0.625, 0.875]);
        assert!(mu.velocities().iter().all(|&v| v == 0.0));
        assert!(mu.temperatures().iter().all(|&t| t == 1.0));

        let doubled = HydroState::new(geom, vec![2.0; 4], vec![0.0; 4], vec![1.0; 4]).unwrap();
        let mu = lift_monokinetic(&doubled).unwrap();
        assert_eq!(mu.weights(), &[0.5; 4]);
        assert_eq!(mu.total_mass(), 2.0);

        let two = HydroState::new(geom, vec![1.0, 3.0], vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(lift_monokinetic(&two).unwrap().weights(), &[0.5, 1.5]);

        let mut bad = uniform.clone();
        bad.e[2] = 0.0;
        assert!(matches!(lift_monokinetic(&bad), Err(Error::State(_))));
        let mut bad = uniform;
        bad.rho[0] = -1e-3;
        assert!(matches!(lift_monokinetic(&bad), Err(Error::State(_))));
    }
}
