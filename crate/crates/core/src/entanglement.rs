//! Reduced one-electron density matrices and the linear quantum entropy
//! S = 1 - Tr(rho²), for both the exact two-body state and the TDQMC
//! guide-wave ensemble.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::Grid1D;
use crate::spectral2d::WaveFunction2D;
use crate::tdqmc::TdqmcEnsemble;

/// One-electron density matrix rho(x, x') on a 1D grid. Trace convention
/// includes the grid weight: Tr rho = sum_m rho(x_m, x_m) dx.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix1D {
    grid: Grid1D,
    rho: Vec<Complex64>,
}

impl DensityMatrix1D {
    pub fn new(grid: Grid1D, rho: Vec<Complex64>) -> Result<Self> {
        let n = grid.n_points();
        if rho.len() != n * n {
            return Err(Error::invalid("density matrix buffer does not match grid"));
        }
        Ok(DensityMatrix1D { grid, rho })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.rho[i * self.grid.n_points() + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        let n = self.grid.n_points();
        (0..n).map(|i| self.rho[i * n + i]).sum::<Complex64>() * self.grid.dx()
    }

    /// max |rho - rho†| over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.grid.n_points();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.rho[i * n + j] - self.rho[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Tr(rho²) with quadrature weights.
    pub fn purity(&self) -> f64 {
        let dx = self.grid.dx();
        self.rho.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx * dx
    }

    /// Rescale so Tr rho = 1.
    pub fn normalize_trace(&mut self) {
        let t = self.trace().re;
        if t > 0.0 {
            let s = 1.0 / t;
            for v in &mut self.rho {
                *v *= s;
            }
        }
    }

    /// Eigenvalues of the weighted kernel rho(x,x') dx, descending.
    /// These are the Schmidt weights; dense solve, fine for n <= 512.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.grid.n_points();
        let dx = self.grid.dx();
        let m = nalgebra::DMatrix::<Complex64>::from_fn(n, n, |i, j| self.rho[i * n + j] * dx);
        // Hermitian to rounding; symmetrize before the eigensolve.
        let h = (m.clone() + m.adjoint()) * Complex64::new(0.5, 0.0);
        let mut eigs: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().cloned().collect();
        eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        eigs
    }
}

/// Linear entropy S = 1 - Tr(rho²).
pub fn linear_entropy(rho: &DensityMatrix1D) -> f64 {
    1.0 - rho.purity()
}

/// Partial trace of the exact two-body state over the partner electron:
/// rho_1(x,x') = ∫ Psi(x,y) Psi*(x',y) dy (electron = 0), and the
/// transpose pairing for electron = 1.
pub fn reduced_density_exact(wf: &WaveFunction2D, electron: usize) -> DensityMatrix1D {
    let grid2 = wf.grid();
    let (n1, n2) = (grid2.axis1.n_points(), grid2.axis2.n_points());
    let amp = wf.amplitudes();
    let (n, axis, dy) = if electron == 0 {
        (n1, grid2.axis1, grid2.axis2.dx())
    } else {
        (n2, grid2.axis2, grid2.axis1.dx())
    };
    let mut rho = vec![Complex64::default(); n * n];
    if electron == 0 {
        // Rows of amp are contiguous in x2.
        for i in 0..n1 {
            let ri = &amp[i * n2..(i + 1) * n2];
            for j in i..n1 {
                let rj = &amp[j * n2..(j + 1) * n2];
                let mut acc = Complex64::default();
                for y in 0..n2 {
                    acc += ri[y] * rj[y].conj();
                }
                acc *= dy;
                rho[i * n1 + j] = acc;
                rho[j * n1 + i] = acc.conj();
            }
        }
    } else {
        for i in 0..n2 {
            for j in i..n2 {
                let mut acc = Complex64::default();
                for y in 0..n1 {
                    acc += amp[y * n2 + i] * amp[y * n2 + j].conj();
                }
                acc *= dy;
                rho[i * n2 + j] = acc;
                rho[j * n2 + i] = acc.conj();
            }
        }
    }
    let mut dm = DensityMatrix1D { grid: axis, rho };
    // The exact state is normalized; absorb residual quadrature drift.
    dm.normalize_trace();
    dm
}

/// Mixed-state density matrix from the guide-wave ensemble:
/// rho_i = (1/M) sum_k phi_i^k (phi_i^k)†, renormalized to unit trace.
/// Walker relabeling leaves the result bit-identical: accumulation runs
/// in a canonical order keyed by the walker positions.
pub fn reduced_density_tdqmc(ensemble: &TdqmcEnsemble, electron: usize) -> DensityMatrix1D {
    let grid = *ensemble.grid();
    let n = grid.n_points();
    let set = ensemble.electron(electron);
    let order = crate::tdqmc::canonical_order(&set.walkers);
    let mut rho = vec![Complex64::default(); n * n];
    for &k in &order {
        let phi = &set.waves[k];
        for i in 0..n {
            let a = phi[i];
            let row = &mut rho[i * n..(i + 1) * n];
            for j in 0..n {
                row[j] += a * phi[j].conj();
            }
        }
    }
    let s = 1.0 / set.waves.len() as f64;
    for v in &mut rho {
        *v *= s;
    }
    let mut dm = DensityMatrix1D { grid, rho };
    dm.normalize_trace();
    dm
}

/// Method label for an entropy column.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySeries {
    pub label: String,
    /// Negative times = imaginary-time buildup, positive = real time.
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
}

impl EntropySeries {
    pub fn new(label: impl Into<String>) -> Self {
        EntropySeries { label: label.into(), times: Vec::new(), entropy: Vec::new() }
    }

    pub fn push(&mut self, t: f64, s: f64) {
        self.times.push(t);
        self.entropy.push(s);
    }

    /// Mean entropy over the trailing fraction of the series (the
    /// plateau of a buildup curve).
    pub fn plateau(&self) -> f64 {
        if self.entropy.is_empty() {
            return 0.0;
        }
        let start = self.entropy.len() * 3 / 4;
        let tail = &self.entropy[start..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Entropy of the exact state's reduced density matrix for electron 1
/// (symmetric states have S1 = S2).
pub fn entropy_exact(wf: &WaveFunction2D) -> f64 {
    linear_entropy(&reduced_density_exact(wf, 0))
}

/// Entropy of the ensemble density matrix for electron 1.
pub fn entropy_tdqmc(ensemble: &TdqmcEnsemble) -> f64 {
    linear_entropy(&reduced_density_tdqmc(ensemble, 0))
}
