//! Thin wrappers around rustfft: batched 1D/2D transforms with the
//! 1/n normalization on the inverse, plus exact trigonometric
//! interpolation of a periodic signal off the grid.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::model::Grid1D;

/// Planned forward/inverse pair for length-n transforms. `process`
/// accepts any buffer whose length is a multiple of n and transforms
/// each contiguous chunk.
pub struct Fft1d {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft1d {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft1d {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len() % self.n, 0);
        self.fwd.process(buf);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len() % self.n, 0);
        self.inv.process(buf);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

}

/// 2D transform over a row-major n1 x n2 buffer (i1 slow, i2 fast).
pub struct Fft2d {
    n1: usize,
    n2: usize,
    fft_rows: Fft1d,
    fft_cols: Fft1d,
}

impl Fft2d {
    pub fn new(n1: usize, n2: usize) -> Self {
        Fft2d {
            n1,
            n2,
            fft_rows: Fft1d::new(n2),
            fft_cols: Fft1d::new(n1),
        }
    }

    fn transpose(&self, src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
        for r in 0..rows {
            for c in 0..cols {
                dst[c * rows + r] = src[r * cols + c];
            }
        }
    }

    pub fn forward(&self, buf: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>) {
        debug_assert_eq!(buf.len(), self.n1 * self.n2);
        scratch.resize(buf.len(), Complex64::default());
        self.fft_rows.forward(buf);
        self.transpose(buf, scratch, self.n1, self.n2);
        self.fft_cols.forward(scratch);
        self.transpose(scratch, buf, self.n2, self.n1);
    }

    pub fn inverse(&self, buf: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>) {
        debug_assert_eq!(buf.len(), self.n1 * self.n2);
        scratch.resize(buf.len(), Complex64::default());
        self.fft_rows.inverse(buf);
        self.transpose(buf, scratch, self.n1, self.n2);
        self.fft_cols.inverse(scratch);
        self.transpose(scratch, buf, self.n2, self.n1);
    }
}

/// Value and first two derivatives of the band-limited interpolant at an
/// arbitrary point, from the FFT coefficients of a length-n grid signal.
/// Exact (to rounding) for signals resolved by the grid.
pub fn eval_spectral(coeffs: &[Complex64], grid: &Grid1D, x: f64) -> (Complex64, Complex64, Complex64) {
    let n = grid.n_points();
    debug_assert_eq!(coeffs.len(), n);
    let dk = 2.0 * std::f64::consts::PI / grid.span();
    // Position relative to the first grid point; coefficients are of
    // samples at x_m = min + m dx.
    let u = x - grid.min();
    let w = Complex64::from_polar(1.0, dk * u);
    let half = n / 2;

    let mut value = Complex64::default();
    let mut d1 = Complex64::default();
    let mut d2 = Complex64::default();
    let mut z = Complex64::new(1.0, 0.0);
    for m in 0..n {
        if m == half {
            // Wrap to the negative branch of the spectrum.
            z = Complex64::from_polar(1.0, -dk * u * half as f64);
        }
        let k = if m < half { m as f64 * dk } else { (m as f64 - n as f64) * dk };
        let c = coeffs[m] * z;
        value += c;
        d1 += c * Complex64::new(0.0, k);
        d2 -= c * k * k;
        z *= w;
    }
    // The interpolant carries the grid-point phase e^{i k min}; coeffs came
    // from samples indexed by m, so dividing by n completes the inverse DFT.
    let s = 1.0 / n as f64;
    (value * s, d1 * s, d2 * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn roundtrip_1d() {
        let fft = Fft1d::new(16);
        let orig: Vec<Complex64> = (0..16).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let mut buf = orig.clone();
        fft.forward(&mut buf);
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-12);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn roundtrip_2d() {
        let fft = Fft2d::new(8, 16);
        let orig: Vec<Complex64> = (0..128).map(|i| Complex64::new((i % 7) as f64, (i % 5) as f64)).collect();
        let mut buf = orig.clone();
        let mut scratch = Vec::new();
        fft.forward(&mut buf, &mut scratch);
        fft.inverse(&mut buf, &mut scratch);
        for (a, b) in buf.iter().zip(&orig) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-10);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-10);
        }
    }

    #[test]
    fn spectral_eval_matches_gaussian() {
        let grid = Grid1D::new(128, 20.0).unwrap();
        let fft = Fft1d::new(128);
        let mut samples: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|&x| Complex64::new((-0.5 * x * x).exp(), 0.0))
            .collect();
        fft.forward(&mut samples);
        for &x in &[0.0, 0.37, -1.234, 2.71] {
            let (v, d1, d2) = eval_spectral(&samples, &grid, x);
            let g = (-0.5 * x * x).exp();
            assert_relative_eq!(v.re, g, epsilon = 1e-10);
            assert_relative_eq!(d1.re, -x * g, epsilon = 1e-9);
            assert_relative_eq!(d2.re, (x * x - 1.0) * g, epsilon = 1e-8);
            assert!(v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_eval_plane_wave() {
        let grid = Grid1D::new(64, 16.0).unwrap();
        let k = 2.0 * std::f64::consts::PI / 16.0 * 3.0;
        let fft = Fft1d::new(64);
        let mut samples: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|&x| Complex64::from_polar(1.0, k * x))
            .collect();
        fft.forward(&mut samples);
        let (v, d1, _) = eval_spectral(&samples, &grid, 0.613);
        let expect = Complex64::from_polar(1.0, k * 0.613);
        assert_relative_eq!(v.re, expect.re, epsilon = 1e-10);
        assert_relative_eq!(v.im, expect.im, epsilon = 1e-10);
        let dexpect = expect * Complex64::new(0.0, k);
        assert_relative_eq!(d1.re, dexpect.re, epsilon = 1e-9);
        assert_relative_eq!(d1.im, dexpect.im, epsilon = 1e-9);
    }
}
