//! The two-body wave function on the configuration-space grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::Grid2D;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction2D {
    grid: Grid2D,
    amp: Vec<Complex64>,
    /// Physical time in real-time runs, accumulated tau in imaginary-time
    /// relaxation.
    pub time: f64,
}

impl WaveFunction2D {
    pub fn new(grid: Grid2D, amp: Vec<Complex64>, time: f64) -> Result<Self> {
        if amp.len() != grid.len() {
            return Err(Error::invalid("amplitude buffer does not match grid size"));
        }
        Ok(WaveFunction2D { grid, amp, time })
    }

    /// Normalized product Gaussian exp(-x1²/(2w²)) exp(-x2²/(2w²)).
    pub fn gaussian(grid: Grid2D, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::invalid(format!("gaussian width must be > 0, got {width}")));
        }
        let x1 = grid.axis1.points();
        let x2 = grid.axis2.points();
        let mut amp = vec![Complex64::default(); grid.len()];
        for (i1, &a) in x1.iter().enumerate() {
            let ga = (-a * a / (2.0 * width * width)).exp();
            for (i2, &b) in x2.iter().enumerate() {
                let gb = (-b * b / (2.0 * width * width)).exp();
                amp[grid.index(i1, i2)] = Complex64::new(ga * gb, 0.0);
            }
        }
        let mut wf = WaveFunction2D { grid, amp, time: 0.0 };
        wf.normalize();
        Ok(wf)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amp
    }

    pub(crate) fn buffer_mut(&mut self) -> &mut Vec<Complex64> {
        &mut self.amp
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let s = 1.0 / n;
            for a in &mut self.amp {
                *a *= s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.amp.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// <Psi(self)|Psi(other)> with grid quadrature.
    pub fn overlap(&self, other: &WaveFunction2D) -> Complex64 {
        self.amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell_area()
    }

    /// <x_i> for electron 0 or 1.
    pub fn expectation_x(&self, electron: usize) -> f64 {
        self.moment(electron, 1)
    }

    /// <x_i²>.
    pub fn expectation_x2(&self, electron: usize) -> f64 {
        self.moment(electron, 2)
    }

    fn moment(&self, electron: usize, power: i32) -> f64 {
        let (n1, n2) = (self.grid.axis1.n_points(), self.grid.axis2.n_points());
        let x1 = self.grid.axis1.points();
        let x2 = self.grid.axis2.points();
        let mut acc = 0.0;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let x = if electron == 0 { x1[i1] } else { x2[i2] };
                acc += x.powi(power) * self.amp[self.grid.index(i1, i2)].norm_sqr();
            }
        }
        acc * self.grid.cell_area()
    }

    /// Probability mass in the outermost ring of cells; a sentinel for
    /// density reaching the periodic box edge.
    pub fn edge_probability(&self) -> f64 {
        let (n1, n2) = (self.grid.axis1.n_points(), self.grid.axis2.n_points());
        let mut acc = 0.0;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                if i1 == 0 || i1 == n1 - 1 || i2 == 0 || i2 == n2 - 1 {
                    acc += self.amp[self.grid.index(i1, i2)].norm_sqr();
                }
            }
        }
        acc * self.grid.cell_area()
    }

    /// L2 norm of Psi(x1,x2) - Psi(x2,x1); requires a square grid.
    pub fn exchange_asymmetry(&self) -> f64 {
        let n = self.grid.axis1.n_points();
        debug_assert_eq!(n, self.grid.axis2.n_points());
        let mut acc = 0.0;
        for i1 in 0..n {
            for i2 in 0..n {
                let d = self.amp[self.grid.index(i1, i2)] - self.amp[self.grid.index(i2, i1)];
                acc += d.norm_sqr();
            }
        }
        (acc * self.grid.cell_area()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid1D;
    use approx::assert_relative_eq;

    fn grid() -> Grid2D {
        Grid2D::square(Grid1D::new(256, 20.0).unwrap())
    }

    #[test]
    fn gaussian_is_normalized() {
        let wf = WaveFunction2D::gaussian(grid(), 1.0).unwrap();
        assert_relative_eq!(wf.norm_sq(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_is_centered() {
        let wf = WaveFunction2D::gaussian(grid(), 1.0).unwrap();
        assert!(wf.expectation_x(0).abs() < 1e-12);
        assert!(wf.expectation_x(1).abs() < 1e-12);
    }

    #[test]
    fn gaussian_second_moment() {
        // For |psi|² ~ exp(-x²/w²) the second moment is w²/2. The grid
        // quadrature of the closed-form integral is the oracle here.
        let wf = WaveFunction2D::gaussian(grid(), 1.0).unwrap();
        assert_relative_eq!(wf.expectation_x2(0), 0.5, epsilon = 1e-6);
        assert_relative_eq!(wf.expectation_x2(1), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn gaussian_rejects_bad_width() {
        assert!(WaveFunction2D::gaussian(grid(), 0.0).is_err());
        assert!(WaveFunction2D::gaussian(grid(), -1.0).is_err());
    }

    #[test]
    fn product_gaussian_is_exchange_symmetric() {
        let wf = WaveFunction2D::gaussian(grid(), 1.0).unwrap();
        assert!(wf.exchange_asymmetry() < 1e-12);
    }
}
