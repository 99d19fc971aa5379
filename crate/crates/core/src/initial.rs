//! Mono-kinetic initial data `(rho_0, u_0, e_0)` described by finite
//! trigonometric polynomials on the 1D torus.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `mean + sum_k cos[k-1] cos(2 pi k x / L) + sin[k-1] sin(2 pi k x / L)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigPolynomial {
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

/// Points used to check positivity of `rho_0` and `e_0`.
const DENSE_SAMPLES: usize = 4096;

impl TrigPolynomial {
    pub fn constant(mean: f64) -> Self {
        Self {
            mean,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    pub fn new(mean: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { mean, cos, sin }
    }

    pub fn eval(&self, x: f64, period: f64) -> f64 {
        let w = 2.0 * PI * x / period;
        let c: f64 = self
            .cos
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * w).cos())
            .sum();
        let s: f64 = self
            .sin
            .iter()
            .enumerate()
            .map(|(k, b)| b * ((k + 1) as f64 * w).sin())
            .sum();
        self.mean + c + s
    }

    pub fn derivative(&self, x: f64, period: f64) -> f64 {
        let base = 2.0 * PI / period;
        let w = base * x;
        let c: f64 = self
            .cos
            .iter()
            .enumerate()
            .map(|(k, a)| -a * (k + 1) as f64 * base * ((k + 1) as f64 * w).sin())
            .sum();
        let s: f64 = self
            .sin
            .iter()
            .enumerate()
            .map(|(k, b)| b * (k + 1) as f64 * base * ((k + 1) as f64 * w).cos())
            .sum();
        c + s
    }

    /// Exact integral over one period.
    pub fn integral(&self, period: f64) -> f64 {
        self.mean * period
    }

    /// Sum of the absolute values of the non-constant coefficients.
    pub fn amplitude(&self) -> f64 {
        self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum()
    }

    pub fn dense_min(&self, period: f64) -> f64 {
        (0..DENSE_SAMPLES)
            .map(|j| self.eval(j as f64 * period / DENSE_SAMPLES as f64, period))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn dense_max(&self, period: f64) -> f64 {
        (0..DENSE_SAMPLES)
            .map(|j| self.eval(j as f64 * period / DENSE_SAMPLES as f64, period))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if std::iter::once(&self.mean)
            .chain(&self.cos)
            .chain(&self.sin)
            .any(|c| !c.is_finite())
        {
            return Err(Error::Config(format!("{name}: non-finite coefficient")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub rho: TrigPolynomial,
    pub u: TrigPolynomial,
    pub e: TrigPolynomial,
}

impl InitialData {
    pub fn constant(rho: f64, u: f64, e: f64) -> Self {
        Self {
            rho: TrigPolynomial::constant(rho),
            u: TrigPolynomial::constant(u),
            e: TrigPolynomial::constant(e),
        }
    }

    /// Finite coefficients, `rho_0 > 0` and `e_0 > 0` on a dense sample.
    pub fn validate(&self, period: f64) -> Result<()> {
        self.rho.validate("rho_0")?;
        self.u.validate("u_0")?;
        self.e.validate("e_0")?;
        let rho_min = self.rho.dense_min(period);
        if rho_min <= 0.0 {
            return Err(Error::Config(format!(
                "rho_0 must stay positive (vacuum is unsupported); dense minimum is {rho_min}"
            )));
        }
        let e_min = self.e.dense_min(period);
        if e_min <= 0.0 {
            return Err(Error::Config(format!(
                "e_0 must stay positive; dense minimum is {e_min}"
            )));
        }
        Ok(())
    }

    /// Largest of the relative perturbation sizes of `rho_0`, `e_0` and the
    /// absolute oscillation of `u_0`; compared with the small-data envelope.
    pub fn perturbation_size(&self) -> f64 {
        let rel = |p: &TrigPolynomial| p.amplitude() / p.mean.abs().max(f64::MIN_POSITIVE);
        rel(&self.rho).max(rel(&self.e)).max(self.u.amplitude())
    }

    pub fn total_mass(&self, period: f64) -> f64 {
        self.rho.integral(period)
    }
}
