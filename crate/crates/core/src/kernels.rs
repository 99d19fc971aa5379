//! Communication kernels `phi` (velocity alignment) and `zeta` (temperature
//! exchange).
//!
//! Every kernel is radial: it sees a displacement on the torus only through its
//! torus distance, which makes it even. Kernels are trait objects built by
//! name from a [`KernelSpec`] through the [`KernelRegistry`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;

pub trait Kernel: Send + Sync + fmt::Debug {
    /// Registry name of the kernel family.
    fn kind(&self) -> &'static str;

    /// Radial profile `k(r)` for a torus distance `r >= 0`.
    fn profile(&self, r: f64) -> f64;

    /// `sup_r k(r)`.
    fn sup_norm(&self) -> f64;

    /// Upper bound on `|k(r1) - k(r2)| / |r1 - r2|`.
    fn lip_constant(&self) -> f64;

    /// Specification that rebuilds this kernel; used for config echoes.
    fn spec(&self) -> KernelSpec;
}

/// Kernel description as it appears in config files: `{kind, kappa, beta}`,
/// or `{kind = "tabulated", table = "path.csv"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Two-column CSV `(r, k(r))` for tabulated kernels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    /// Inline samples `[[r, k], ...]`, an alternative to `table`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
}

impl KernelSpec {
    pub fn radial_rational(kappa: f64, beta: f64) -> Self {
        Self {
            kind: RadialRational::KIND.into(),
            kappa: Some(kappa),
            beta: Some(beta),
            table: None,
            samples: None,
        }
    }

    pub fn constant(kappa: f64) -> Self {
        Self {
            kind: ConstantKernel::KIND.into(),
            kappa: Some(kappa),
            beta: None,
            table: None,
            samples: None,
        }
    }

    pub fn tabulated(samples: Vec<[f64; 2]>) -> Self {
        Self {
            kind: TabulatedKernel::KIND.into(),
            kappa: None,
            beta: None,
            table: None,
            samples: Some(samples),
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Kernel>> {
        KernelRegistry::builtin().build(self)
    }

    /// Resolve a relative `table` path against the directory of the config file.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(table) = &self.table {
            if table.is_relative() {
                self.table = Some(base.join(table));
            }
        }
    }

    fn positive(&self, field: &str, value: Option<f64>) -> Result<f64> {
        match value {
            Some(v) if v.is_finite() && v > 0.0 => Ok(v),
            Some(v) => Err(Error::Config(format!(
                "{} kernel: `{field}` must be positive, got {v}",
                self.kind
            ))),
            None => Err(Error::Config(format!(
                "{} kernel: missing `{field}`",
                self.kind
            ))),
        }
    }
}

/// `kappa * (1 + r^2)^(-beta)`.
#[derive(Debug, Clone, Copy)]
pub struct RadialRational {
    kappa: f64,
    beta: f64,
}

impl RadialRational {
    pub const KIND: &'static str = "radial-rational";

    pub fn new(kappa: f64, beta: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(Error::Config(format!(
                "radial-rational kernel needs kappa > 0 and beta > 0, got kappa = {kappa}, beta = {beta}"
            )));
        }
        Ok(Self { kappa, beta })
    }
}

impl Kernel for RadialRational {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    #[inline]
    fn profile(&self, r: f64) -> f64 {
        let base = 1.0 + r * r;
        if self.beta == 1.0 {
            self.kappa / base
        } else {
            self.kappa * base.powf(-self.beta)
        }
    }

    fn sup_norm(&self) -> f64 {
        self.kappa
    }

    fn lip_constant(&self) -> f64 {
        // |k'(r)| = 2 beta kappa r (1 + r^2)^(-beta - 1), maximal at r^2 = 1 / (2 beta + 1)
        let r = (2.0 * self.beta + 1.0).sqrt().recip();
        2.0 * self.beta * self.kappa * r * (1.0 + r * r).powf(-self.beta - 1.0)
    }

    fn spec(&self) -> KernelSpec {
        KernelSpec::radial_rational(self.kappa, self.beta)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantKernel {
    kappa: f64,
}

impl ConstantKernel {
    pub const KIND: &'static str = "constant";

    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::Config(format!(
                "constant kernel needs kappa >= 0, got {kappa}"
            )));
        }
        Ok(Self { kappa })
    }
}

impl Kernel for ConstantKernel {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    #[inline]
    fn profile(&self, _r: f64) -> f64 {
        self.kappa
    }

    fn sup_norm(&self) -> f64 {
        self.kappa
    }

    fn lip_constant(&self) -> f64 {
        0.0
    }

    fn spec(&self) -> KernelSpec {
        KernelSpec::constant(self.kappa)
    }
}

/// Piecewise-linear interpolation of user samples, extended by constants
/// outside the sampled range.
#[derive(Debug, Clone)]
pub struct TabulatedKernel {
    r: Vec<f64>,
    k: Vec<f64>,
    sup: f64,
    lip: f64,
}

impl TabulatedKernel {
    pub const KIND: &'static str = "tabulated";

    pub fn new(samples: &[[f64; 2]]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Config(format!(
                "tabulated kernel needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        let r: Vec<f64> = samples.iter().map(|s| s[0]).collect();
        let k: Vec<f64> = samples.iter().map(|s| s[1]).collect();
        if r.iter().chain(&k).any(|v| !v.is_finite()) {
            return Err(Error::Config("tabulated kernel has non-finite samples".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "tabulated kernel radii must be nonnegative and strictly increasing".into(),
            ));
        }
        if k.iter().any(|&v| v < 0.0) {
            return Err(Error::Config("tabulated kernel values must be nonnegative".into()));
        }
        let sup = k.iter().copied().fold(0.0, f64::max);
        let lip = r
            .windows(2)
            .zip(k.windows(2))
            .map(|(rw, kw)| ((kw[1] - kw[0]) / (rw[1] - rw[0])).abs())
            .fold(0.0, f64::max);
        Ok(Self { r, k, sup, lip })
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::parse(path, e))?;
        let mut samples = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::parse(path, e))?;
            if record.len() != 2 {
                return Err(Error::parse(
                    path,
                    format!("line {}: expected 2 columns (r, k)", line + 1),
                ));
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => samples.push([v[0], v[1]]),
                // a header line
                Err(_) if line == 0 => continue,
                Err(e) => {
                    return Err(Error::parse(path, format!("line {}: {e}", line + 1)));
                }
            }
        }
        Self::new(&samples)
    }
}

impl Kernel for TabulatedKernel {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn profile(&self, r: f64) -> f64 {
        let n = self.r.len();
        if r <= self.r[0] {
            return self.k[0];
        }
        if r >= self.r[n - 1] {
            return self.k[n - 1];
        }
        let hi = self.r.partition_point(|&s| s <= r);
        let lo = hi - 1;
        let t = (r - self.r[lo]) / (self.r[hi] - self.r[lo]);
        self.k[lo] + t * (self.k[hi] - self.k[lo])
    }

    fn sup_norm(&self) -> f64 {
        self.sup
    }

    fn lip_constant(&self) -> f64 {
        self.lip
    }

    fn spec(&self) -> KernelSpec {
        KernelSpec::tabulated(self.r.iter().zip(&self.k).map(|(&r, &k)| [r, k]).collect())
    }
}

type KernelFactory = fn(&KernelSpec) -> Result<Arc<dyn Kernel>>;

/// Kernel families available by name.
pub struct KernelRegistry {
    entries: Vec<(&'static str, KernelFactory)>,
}

impl KernelRegistry {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(RadialRational::KIND, |spec| {
            let kappa = spec.positive("kappa", spec.kappa)?;
            let beta = spec.positive("beta", spec.beta)?;
            Ok(Arc::new(RadialRational::new(kappa, beta)?))
        });
        reg.register(ConstantKernel::KIND, |spec| {
            let kappa = spec
                .kappa
                .ok_or_else(|| Error::Config("constant kernel: missing `kappa`".into()))?;
            Ok(Arc::new(ConstantKernel::new(kappa)?))
        });
        reg.register(TabulatedKernel::KIND, |spec| {
            let kernel = match (&spec.samples, &spec.table) {
                (Some(samples), None) => TabulatedKernel::new(samples)?,
                (None, Some(path)) => TabulatedKernel::from_csv(path)?,
                _ => {
                    return Err(Error::Config(
                        "tabulated kernel needs exactly one of `table` or `samples`".into(),
                    ))
                }
            };
            Ok(Arc::new(kernel))
        });
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: KernelFactory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn build(&self, spec: &KernelSpec) -> Result<Arc<dyn Kernel>> {
        let factory = self
            .entries
            .iter()
            .find(|(n, _)| *n == spec.kind)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::UnknownStrategy {
                registry: "kernel kind",
                name: spec.kind.clone(),
                available: self.names().join(", "),
            })?;
        factory(spec)
    }
}

/// Evaluate `k` at a torus displacement.
pub fn kernel_eval(k: &dyn Kernel, displacement: &[f64], geom: &TorusGeometry) -> Result<f64> {
    if displacement.len() != geom.dim || displacement.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain(format!(
            "kernel displacement must be a finite {}-vector",
            geom.dim
        )));
    }
    Ok(k.profile(geom.norm_unchecked(displacement)))
}

pub fn kernel_lip_constant(k: &dyn Kernel) -> f64 {
    k.lip_constant()
}

/// The pair `(phi, zeta)` driving the dynamics.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub phi: Arc<dyn Kernel>,
    pub zeta: Arc<dyn Kernel>,
}

impl KernelPair {
    pub fn new(phi: Arc<dyn Kernel>, zeta: Arc<dyn Kernel>) -> Self {
        Self { phi, zeta }
    }

    pub fn from_specs(phi: &KernelSpec, zeta: &KernelSpec) -> Result<Self> {
        let reg = KernelRegistry::builtin();
        Ok(Self::new(reg.build(phi)?, reg.build(zeta)?))
    }

    /// Both kernels identically zero: free streaming.
    pub fn zero() -> Self {
        Self::new(
            Arc::new(ConstantKernel { kappa: 0.0 }),
            Arc::new(ConstantKernel { kappa: 0.0 }),
        )
    }
}
