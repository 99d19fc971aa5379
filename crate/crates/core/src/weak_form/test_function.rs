//! Smooth test functions `g(t, x, v, theta)` with analytic partials,
//! periodic in `x` and compactly supported in `(v, theta)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;
use crate::measures::SupportBounds;

/// Region in `(v, theta)` where the bump equals one. The bump decays to zero
/// over a further `margin` times the half-width on every side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportBox {
    pub v_lo: Vec<f64>,
    pub v_hi: Vec<f64>,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub margin: f64,
}

impl SupportBox {
    pub fn new(v_lo: Vec<f64>, v_hi: Vec<f64>, theta_lo: f64, theta_hi: f64, margin: f64) -> Result<Self> {
        let b = Self {
            v_lo,
            v_hi,
            theta_lo,
            theta_hi,
            margin,
        };
        b.validate()?;
        Ok(b)
    }

    /// Box `[-P - pad, P + pad]^d x [theta_min - pad, theta_max + pad]`
    /// covering the given support bounds.
    pub fn around(bounds: &SupportBounds, dim: usize, pad: f64, margin: f64) -> Result<Self> {
        let p = bounds.max_speed + pad;
        Self::new(
            vec![-p; dim],
            vec![p; dim],
            bounds.theta_min - pad,
            bounds.theta_max + pad,
            margin,
        )
    }

    fn validate(&self) -> Result<()> {
        let finite = self
            .v_lo
            .iter()
            .chain(&self.v_hi)
            .chain([&self.theta_lo, &self.theta_hi, &self.margin])
            .all(|c| c.is_finite());
        let ordered = self.v_lo.len() == self.v_hi.len()
            && !self.v_lo.is_empty()
            && self.v_lo.iter().zip(&self.v_hi).all(|(a, b)| a < b)
            && self.theta_lo < self.theta_hi;
        if !finite || !ordered || !(self.margin > 0.0) {
            return Err(Error::Config(format!("degenerate test-function box {self:?}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.v_lo.len()
    }

    /// True when `(v, theta)` lies where the bump is nonzero.
    pub fn in_support(&self, v: &[f64], theta: f64) -> bool {
        let inside = |c: f64, lo: f64, hi: f64| {
            let half = (hi - lo) / 2.0;
            ((c - (lo + hi) / 2.0).abs() - half) < self.margin * half
        };
        v.iter()
            .enumerate()
            .all(|(k, &c)| inside(c, self.v_lo[k], self.v_hi[k]))
            && inside(theta, self.theta_lo, self.theta_hi)
    }

    /// Plateau bump along one coordinate and its derivative.
    fn bump1(&self, c: f64, lo: f64, hi: f64) -> (f64, f64) {
        let half = (hi - lo) / 2.0;
        let s = (c - (lo + hi) / 2.0) / half;
        let r = (s.abs() - 1.0) / self.margin;
        if r <= 0.0 {
            (1.0, 0.0)
        } else if r >= 1.0 {
            (0.0, 0.0)
        } else {
            let q = 1.0 - r * r;
            let dr = s.signum() / (self.margin * half);
            (q * q * q, -6.0 * r * q * q * dr)
        }
    }
}

/// `x`-dependence: `cos(2 pi k.x / L + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrigFactor {
    pub wave: Vec<i32>,
    pub phase: f64,
}

/// `(v, theta)` monomial in front of the bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Monomial {
    One,
    V(usize),
    Theta,
    VTheta(usize),
}

impl Monomial {
    /// Value, `d/dv_k` for every `k`, and `d/dtheta`.
    fn eval(self, v: &[f64], theta: f64, dv: &mut [f64]) -> (f64, f64) {
        dv.iter_mut().for_each(|d| *d = 0.0);
        match self {
            Monomial::One => (1.0, 0.0),
            Monomial::V(k) => {
                dv[k] = 1.0;
                (v[k], 0.0)
            }
            Monomial::Theta => (theta, 1.0),
            Monomial::VTheta(k) => {
                dv[k] = theta;
                (v[k] * theta, v[k])
            }
        }
    }
}

/// `g = (1 + slope t) * trig(x) * monomial(v, theta) * bump(v, theta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub id: String,
    pub time_slope: f64,
    pub trig: TrigFactor,
    pub monomial: Monomial,
    pub support: SupportBox,
    pub period: f64,
}

/// `g` and all first partials at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub g: f64,
    pub dt: f64,
    pub dx: Vec<f64>,
    pub dv: Vec<f64>,
    pub dtheta: f64,
}

impl TestFunction {
    pub fn value(&self, t: f64, x: &[f64], v: &[f64], theta: f64) -> f64 {
        self.jet(t, x, v, theta).g
    }

    pub fn jet(&self, t: f64, x: &[f64], v: &[f64], theta: f64) -> Jet {
        let d = v.len();
        let tau = 1.0 + self.time_slope * t;
        let omega = 2.0 * PI / self.period;
        let arg: f64 = self
            .trig
            .wave
            .iter()
            .zip(x)
            .map(|(&k, &xk)| k as f64 * omega * xk)
            .sum::<f64>()
            + self.trig.phase;
        let (xs, xc) = arg.sin_cos();
        let mut mdv = vec![0.0; d];
        let (m, mdt) = self.monomial.eval(v, theta, &mut mdv);

        // product of one-dimensional bumps and its gradient
        let mut factors = Vec::with_capacity(d + 1);
        for k in 0..d {
            factors.push(self.support.bump1(v[k], self.support.v_lo[k], self.support.v_hi[k]));
        }
        factors.push(self.support.bump1(theta, self.support.theta_lo, self.support.theta_hi));
        let b: f64 = factors.iter().map(|f| f.0).product();
        let partial = |skip: usize| -> f64 {
            factors
                .iter()
                .enumerate()
                .map(|(i, f)| if i == skip { f.1 } else { f.0 })
                .product()
        };

        let spatial = tau * m * b;
        Jet {
            g: tau * xc * m * b,
            dt: self.time_slope * xc * m * b,
            dx: self
                .trig
                .wave
                .iter()
                .map(|&k| -(k as f64) * omega * xs * spatial)
                .collect(),
            dv: (0..d)
                .map(|k| tau * xc * (mdv[k] * b + m * partial(k)))
                .collect(),
            dtheta: tau * xc * (mdt * b + m * partial(d)),
        }
    }

    /// Smallest region outside of which `g` vanishes identically.
    pub fn in_support(&self, v: &[f64], theta: f64) -> bool {
        self.support.in_support(v, theta)
    }
}

/// Deterministic family of test functions on `support`, starting with the
/// function equal to one inside the box.
pub fn test_function_suite(support: &SupportBox, geom: &TorusGeometry) -> Result<Vec<TestFunction>> {
    support.validate()?;
    if support.dim() != geom.dim {
        return Err(Error::Config(format!(
            "test-function box has dimension {}, torus has {}",
            support.dim(),
            geom.dim
        )));
    }
    let d = geom.dim;
    let axis = |k: usize, n: i32| -> Vec<i32> {
        let mut w = vec![0; d];
        w[k % d] = n;
        w
    };
    let diag: Vec<i32> = vec![1; d];
    let cos = |wave: Vec<i32>| TrigFactor { wave, phase: 0.0 };
    let sin = |wave: Vec<i32>| TrigFactor {
        wave,
        phase: -PI / 2.0,
    };
    let last = d - 1;
    let members: Vec<(&str, f64, TrigFactor, Monomial)> = vec![
        ("one", 0.0, cos(vec![0; d]), Monomial::One),
        ("cos1", 0.0, cos(axis(0, 1)), Monomial::One),
        ("sin1-v", 0.0, sin(axis(0, 1)), Monomial::V(0)),
        ("cos2-theta", 0.0, cos(axis(last, 2)), Monomial::Theta),
        ("sin1-vtheta", 0.0, sin(axis(0, 1)), Monomial::VTheta(last)),
        ("t-cos1-v", 0.5, cos(axis(last, 1)), Monomial::V(last)),
        ("t-sin2-theta", 1.0, sin(axis(0, 2)), Monomial::Theta),
        ("diag-vtheta", 0.0, TrigFactor { wave: diag, phase: 0.3 }, Monomial::VTheta(0)),
        ("v", 0.0, cos(vec![0; d]), Monomial::V(0)),
        ("theta", 0.0, cos(vec![0; d]), Monomial::Theta),
    ];
    Ok(members
        .into_iter()
        .map(|(id, time_slope, trig, monomial)| TestFunction {
            id: id.to_owned(),
            time_slope,
            trig,
            monomial,
            support: support.clone(),
            period: geom.period,
        })
        .collect())
}
