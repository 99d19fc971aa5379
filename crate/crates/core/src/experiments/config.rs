//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;
use crate::hydro::HydroOptions;
use crate::initial::{InitialData, TrigPolynomial};
use crate::kernels::{KernelPair, KernelSpec};
use crate::kinetic::{KineticModel, KineticOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelsConfig {
    pub phi: KernelSpec,
    pub zeta: KernelSpec,
}

impl Default for KernelsConfig {
    fn default() -> Self {
        Self {
            phi: KernelSpec::radial_rational(1.0, 1.0),
            zeta: KernelSpec::radial_rational(1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    #[default]
    Grid,
    Iid,
}

/// Mono-kinetic descriptors `(rho_0, u_0, e_0)`, or a particle CSV.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub rho: Option<TrigPolynomial>,
    pub u: Option<TrigPolynomial>,
    pub e: Option<TrigPolynomial>,
    /// Particle measure in the `x1..xd,v1..vd,theta,weight` format.
    pub particles: Option<PathBuf>,
    pub sampling: Sampling,
}

impl InitialConfig {
    pub fn mono_kinetic(&self) -> Result<InitialData> {
        match (&self.rho, &self.u, &self.e) {
            (Some(rho), Some(u), Some(e)) => Ok(InitialData {
                rho: rho.clone(),
                u: u.clone(),
                e: e.clone(),
            }),
            (None, None, None) => Err(Error::Config(
                "this experiment needs mono-kinetic initial data `[initial.rho]`, `[initial.u]`, `[initial.e]`".into(),
            )),
            _ => Err(Error::Config(
                "`[initial]` must give all of `rho`, `u` and `e`".into(),
            )),
        }
    }

    pub fn has_mono_kinetic(&self) -> bool {
        self.rho.is_some() || self.u.is_some() || self.e.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    pub dt: f64,
    /// Steps between saved states.
    pub save_every: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            dt: 1e-3,
            save_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolutionConfig {
    /// Particle count for single runs.
    pub particles: usize,
    /// Grid size for single runs.
    pub cells: usize,
    /// `N = M` ladder for refinement studies.
    pub ladder: Vec<usize>,
}

impl Default for ResolutionConfig {
    fn default() -> Self {
        Self {
            particles: 64,
            cells: 64,
            ladder: vec![32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub epsilons: Vec<f64>,
    /// Number of starting points for the coupled-characteristics check.
    pub probes: usize,
    /// RK4 substeps per save interval along coupled characteristics.
    pub substeps: usize,
    /// Rerun every perturbation with half the time step.
    pub dt_halving: bool,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-2, 1e-3],
            probes: 20,
            substeps: 2,
            dt_halving: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KineticConfig {
    /// `false` freezes temperatures (classical Cucker-Smale).
    pub thermal: bool,
    #[serde(flatten)]
    pub options: KineticOptions,
}

impl Default for KineticConfig {
    fn default() -> Self {
        Self {
            thermal: true,
            options: KineticOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceConfig {
    pub solver: String,
    pub capacity: usize,
    /// Reduce oversized supports by farthest-point subsampling instead of failing.
    pub subsample: bool,
    /// Measures compared by the `distance` experiment.
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            solver: crate::measures::MinCostFlowSolver::NAME.into(),
            capacity: crate::measures::MinCostFlowSolver::DEFAULT_CAPACITY,
            subsample: true,
            a: None,
            b: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Sweeps to run, from `rk4`, `weak-residual`, `monokinetic`,
    /// `propagation`, `manufactured`.
    pub sweeps: Vec<String>,
    /// Coarsest time step of the weak-residual and mono-kinetic sweeps.
    pub dt0: f64,
    /// Coarsest time step of the RK4 sweep.
    pub rk4_dt0: f64,
    /// Number of halvings of `dt0` (levels = halvings + 1).
    pub halvings: usize,
    /// Particle count of the weak-residual sweep.
    pub particles: usize,
    /// Grid ladder of the manufactured-solution sweep.
    pub manufactured_cells: Vec<usize>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            sweeps: ["rk4", "weak-residual", "monokinetic", "propagation", "manufactured"]
                .map(String::from)
                .to_vec(),
            dt0: 0.01,
            rk4_dt0: 0.05,
            halvings: 2,
            particles: 32,
            manufactured_cells: vec![12, 24, 48],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub geometry: TorusGeometry,
    #[serde(default)]
    pub kernels: KernelsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub resolution: ResolutionConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default)]
    pub hydro: HydroOptions,
    #[serde(default)]
    pub kinetic: KineticConfig,
    #[serde(default)]
    pub distance: DistanceConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
}

impl ExperimentConfig {
    /// Configuration with every section at its default.
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_owned(),
            seed: 0,
            out: None,
            geometry: TorusGeometry::default(),
            kernels: KernelsConfig::default(),
            initial: InitialConfig::default(),
            time: TimeConfig::default(),
            resolution: ResolutionConfig::default(),
            stability: StabilityConfig::default(),
            hydro: HydroOptions::default(),
            kinetic: KineticConfig::default(),
            distance: DistanceConfig::default(),
            convergence: ConvergenceConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parse and validate a config file; relative paths inside it are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *p = Some(base.join(&*q));
                }
            }
        };
        fix(&mut self.initial.particles);
        fix(&mut self.distance.a);
        fix(&mut self.distance.b);
        fix(&mut self.out);
        self.kernels.phi.resolve_paths(base);
        self.kernels.zeta.resolve_paths(base);
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.kernel_pair()?;
        let t = &self.time;
        if !(t.horizon.is_finite() && t.horizon > 0.0) {
            return Err(Error::Config(format!("time.horizon must be positive, got {}", t.horizon)));
        }
        if !(t.dt.is_finite() && t.dt > 0.0) {
            return Err(Error::Config(format!("time.dt must be positive, got {}", t.dt)));
        }
        crate::hydro::step_count(t.horizon, t.dt, t.save_every)?;
        let ladder = &self.resolution.ladder;
        if ladder.contains(&0) || ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "resolution.ladder must be positive and strictly increasing, got {ladder:?}"
            )));
        }
        if self.resolution.particles == 0 || self.resolution.cells < 2 {
            return Err(Error::Config("resolution.particles and resolution.cells must be positive".into()));
        }
        if self.initial.has_mono_kinetic() {
            self.initial.mono_kinetic()?.validate(self.geometry.period)?;
        }
        if self.stability.epsilons.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::Config("stability.epsilons must be finite and nonnegative".into()));
        }
        if self.distance.capacity == 0 {
            return Err(Error::Config("distance.capacity must be positive".into()));
        }
        crate::measures::SolverRegistry::builtin().get(&self.distance.solver)?;
        crate::hydro::ConvolverRegistry::builtin().get(&self.hydro.convolution)?;
        Ok(())
    }

    pub fn kernel_pair(&self) -> Result<KernelPair> {
        KernelPair::from_specs(&self.kernels.phi, &self.kernels.zeta)
    }

    pub fn kinetic_model(&self) -> Result<KineticModel> {
        let mut model = KineticModel::new(self.geometry, self.kernel_pair()?);
        model.thermal = self.kinetic.thermal;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml_str("experiment = \"propagation\"").unwrap();
        assert_eq!(cfg.geometry, TorusGeometry::default());
        assert_eq!(cfg.resolution.ladder, vec![32, 64, 128]);
        assert_eq!(cfg.kernels.phi, KernelSpec::radial_rational(1.0, 1.0));
        cfg.validate().unwrap();
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
experiment = "stability"
seed = 9

[geometry]
dim = 1
period = 2.0

[kernels.phi]
kind = "constant"
kappa = 0.5

[kernels.zeta]
kind = "radial-rational"
kappa = 1.0
beta = 2.0

[initial]
rho = { mean = 1.0, cos = [0.1] }
u = { mean = 0.0, sin = [0.05] }
e = { mean = 1.0 }

[time]
horizon = 0.5
dt = 0.01
save_every = 5

[kinetic]
thermal = false
theta_guard = 0.1
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 9);
        assert!(!cfg.kinetic.thermal);
        assert_eq!(cfg.kinetic.options.theta_guard, Some(0.1));
        let echo = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&echo).unwrap(), cfg);
    }

    #[test]
    fn rejects_invalid_values() {
        let bad = [
            "experiment = \"x\"\n[time]\nhorizon = 0.0",
            "experiment = \"x\"\n[time]\ndt = -1.0",
            "experiment = \"x\"\n[resolution]\nladder = [64, 32]",
            "experiment = \"x\"\n[initial]\nrho = { mean = 1.0 }\nu = { mean = 0.0 }\ne = { mean = 0.2, cos = [0.5] }",
            "experiment = \"x\"\n[initial]\nrho = { mean = 1.0 }",
            "experiment = \"x\"\n[distance]\nsolver = \"simplex\"",
            "experiment = \"x\"\n[kernels.phi]\nkind = \"gaussian\"\n[kernels.zeta]\nkind = \"constant\"\nkappa = 1.0",
        ];
        for text in bad {
            let cfg = ExperimentConfig::from_toml_str(text).unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
        assert!(ExperimentConfig::from_toml_str("experiment = \"x\"\nbogus = 1").is_err());
    }
}
