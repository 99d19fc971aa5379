//! Periodic grid convolutions `(k * f)(x_i) = h sum_j k(x_i - x_j) f_j`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;
use crate::kernels::Kernel;

/// Strategy that turns a kernel into a convolution operator on an `M`-cell grid.
pub trait Convolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn plan(&self, kernel: &dyn Kernel, geom: &TorusGeometry, cells: usize) -> Box<dyn GridConvolution>;
}

pub trait GridConvolution: Send + Sync {
    fn apply(&self, f: &[f64]) -> Vec<f64>;
}

/// Kernel values at the grid offsets `k h`, wrapped on the torus.
fn kernel_samples(kernel: &dyn Kernel, geom: &TorusGeometry, cells: usize) -> Vec<f64> {
    let h = geom.period / cells as f64;
    (0..cells)
        .map(|k| kernel.profile(geom.axis_distance(k as f64 * h, 0.0)))
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DirectConvolver;

struct DirectPlan {
    samples: Vec<f64>,
    h: f64,
}

impl Convolver for DirectConvolver {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn plan(&self, kernel: &dyn Kernel, geom: &TorusGeometry, cells: usize) -> Box<dyn GridConvolution> {
        Box::new(DirectPlan {
            samples: kernel_samples(kernel, geom, cells),
            h: geom.period / cells as f64,
        })
    }
}

impl GridConvolution for DirectPlan {
    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let m = self.samples.len();
        (0..m)
            .map(|i| {
                let s: f64 = (0..m).map(|j| self.samples[(i + m - j) % m] * f[j]).sum();
                self.h * s
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SpectralConvolver;

struct SpectralPlan {
    symbol: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Convolver for SpectralConvolver {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn plan(&self, kernel: &dyn Kernel, geom: &TorusGeometry, cells: usize) -> Box<dyn GridConvolution> {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(cells);
        let inverse = planner.plan_fft_inverse(cells);
        let h = geom.period / cells as f64;
        let mut symbol: Vec<Complex<f64>> = kernel_samples(kernel, geom, cells)
            .into_iter()
            .map(|c| Complex::new(c, 0.0))
            .collect();
        forward.process(&mut symbol);
        // fold the quadrature weight and the inverse-FFT normalisation in once
        let scale = h / cells as f64;
        symbol.iter_mut().for_each(|c| *c *= scale);
        Box::new(SpectralPlan {
            symbol,
            forward,
            inverse,
        })
    }
}

impl GridConvolution for SpectralPlan {
    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf.iter_mut().zip(&self.symbol).for_each(|(b, s)| *b *= s);
        self.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Convolution paths by name; `spectral` is the default.
pub struct ConvolverRegistry {
    convolvers: Vec<Box<dyn Convolver>>,
}

impl ConvolverRegistry {
    pub fn builtin() -> Self {
        Self {
            convolvers: vec![Box::new(SpectralConvolver), Box::new(DirectConvolver)],
        }
    }

    pub fn register<C: Convolver + 'static>(&mut self, c: C) {
        self.convolvers.retain(|x| x.name() != c.name());
        self.convolvers.push(Box::new(c));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.convolvers.iter().map(|c| c.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Convolver> {
        self.convolvers
            .iter()
            .find(|c| c.name() == name)
            .map(|c| c.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                registry: "convolution path",
                name: name.to_owned(),
                available: self.names().join(", "),
            })
    }
}
