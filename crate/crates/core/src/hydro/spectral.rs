//! Fourier differentiation on a uniform periodic grid.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub struct SpectralOps {
    cells: usize,
    period: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SpectralOps {
    pub fn new(cells: usize, period: f64) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            cells,
            period,
            forward: planner.plan_fft_forward(cells),
            inverse: planner.plan_fft_inverse(cells),
        }
    }

    /// Signed integer wavenumber of FFT bin `j`.
    #[inline]
    fn wavenumber(&self, j: usize) -> i64 {
        let m = self.cells as i64;
        let j = j as i64;
        if j <= m / 2 {
            j
        } else {
            j - m
        }
    }

    /// Highest wavenumber kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        self.cells as i64 / 3
    }

    fn transform(&self, f: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// `d/dx f` with modes above `M/3` (and the Nyquist mode) removed.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let mut buf = self.transform(f);
        let cutoff = self.dealias_cutoff();
        let m = self.cells;
        for (j, c) in buf.iter_mut().enumerate() {
            let k = self.wavenumber(j);
            let nyquist = m % 2 == 0 && j == m / 2;
            if k.abs() > cutoff || nyquist {
                *c = Complex::new(0.0, 0.0);
            } else {
                let ik = Complex::new(0.0, 2.0 * PI * k as f64 / self.period);
                *c *= ik / m as f64;
            }
        }
        // the k = 0 mode is exactly zero, so grid sums of derivatives vanish
        buf[0] = Complex::new(0.0, 0.0);
        self.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Fraction of the non-mean spectral energy of `f` sitting in the top
    /// third of the band kept by the 2/3 rule. Zero for constant fields.
    pub fn upper_band_fraction(&self, f: &[f64]) -> f64 {
        let buf = self.transform(f);
        let cutoff = self.dealias_cutoff();
        let upper = (2 * cutoff) / 3;
        let mut total = 0.0;
        let mut top = 0.0;
        for (j, c) in buf.iter().enumerate().skip(1) {
            let k = self.wavenumber(j).abs();
            let e = c.norm_sqr();
            total += e;
            if k > upper {
                top += e;
            }
        }
        let mean = buf[0].norm_sqr().max(1e-300);
        if total <= 1e-26 * mean {
            0.0
        } else {
            top / total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_resolved_modes_exactly() {
        let m = 32;
        let ops = SpectralOps::new(m, 2.0);
        let x: Vec<f64> = (0..m).map(|j| (j as f64 + 0.5) * 2.0 / m as f64).collect();
        let f: Vec<f64> = x.iter().map(|x| (PI * x).sin() + 0.3 * (3.0 * PI * x).cos()).collect();
        let df = ops.derivative(&f);
        for (xi, d) in x.iter().zip(&df) {
            let exact = PI * (PI * xi).cos() - 0.9 * PI * (3.0 * PI * xi).sin();
            assert!((d - exact).abs() < 1e-12);
        }
        assert!(df.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn removes_modes_beyond_two_thirds() {
        let m = 12;
        let ops = SpectralOps::new(m, 1.0);
        // k = 5 > 12 / 3
        let f: Vec<f64> = (0..m).map(|j| (2.0 * PI * 5.0 * j as f64 / m as f64).sin()).collect();
        assert!(ops.derivative(&f).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn band_fraction_detects_rough_fields() {
        let m = 64;
        let ops = SpectralOps::new(m, 1.0);
        let smooth: Vec<f64> = (0..m).map(|j| 1.0 + 0.1 * (2.0 * PI * j as f64 / m as f64).cos()).collect();
        assert!(ops.upper_band_fraction(&smooth) < 1e-20);
        assert_eq!(ops.upper_band_fraction(&vec![2.0; m]), 0.0);
        let step: Vec<f64> = (0..m).map(|j| if j < m / 2 { 1.0 } else { 2.0 }).collect();
        assert!(ops.upper_band_fraction(&step) > 1e-3);
    }
}
