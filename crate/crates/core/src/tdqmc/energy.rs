//! The two ground-state energy estimators: the mixed walker/wave form
//! (local energy at walker positions) and the wave-only quadrature form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{eval_spectral, Fft1d};
use crate::model::{confinement_potential, soft_core_potential, SystemSpec};
use crate::tdqmc::ensemble::{sorted_mean_stderr, TdqmcEnsemble};

const NODE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEstimate {
    pub e1: f64,
    pub e1_stderr: f64,
    pub e2: f64,
    pub e2_stderr: f64,
}

/// Mixed estimator: walker average over k of
///   sum_i [ -phi_i''(x_i)/2phi_i + V_en(x_i) ] + sum_{i<j} V_ee(x_i, x_j)
/// evaluated at the walker positions. Walkers whose guide-wave density at
/// their own position is below the node guard are left out of the average.
/// Returns (mean, standard error).
pub fn energy_mixed(ensemble: &TdqmcEnsemble, spec: &SystemSpec) -> Result<(f64, f64)> {
    let grid = ensemble.grid();
    let fft = Fft1d::new(grid.n_points());
    let n_el = ensemble.n_electrons();
    let m = ensemble.n_walkers();
    let mut scratch: Vec<Complex64> = Vec::new();
    let mut samples = Vec::with_capacity(m);

    'walker: for k in 0..m {
        let mut local = 0.0;
        for i in 0..n_el {
            let set = ensemble.electron(i);
            let x = set.walkers[k];
            let wave = &set.waves[k];
            let max_density = wave.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
            scratch.clear();
            scratch.extend_from_slice(wave);
            fft.forward(&mut scratch);
            let (v, _, d2) = eval_spectral(&scratch, grid, x);
            if v.norm_sqr() < NODE_GUARD * max_density {
                continue 'walker;
            }
            local += (-0.5 * d2 / v).re + confinement_potential(x, spec);
        }
        for i in 0..n_el {
            for j in 0..i {
                local += soft_core_potential(
                    ensemble.electron(i).walkers[k],
                    ensemble.electron(j).walkers[k],
                    spec,
                );
            }
        }
        samples.push(local);
    }

    if samples.is_empty() {
        return Err(Error::numerical("every walker fell below the node guard"));
    }
    Ok(sorted_mean_stderr(&samples))
}

/// Wave-only estimator: walker average over k of
///   sum_i [ int |phi_i'|^2/2 + int V_en |phi_i|^2 ]
///   + sum_{i>j} int V_ee(x_i^k, x_j) |phi_j^k(x_j)|^2 dx_j.
/// Kinetic quadrature is spectral. Returns (mean, standard error).
pub fn energy_wave(ensemble: &TdqmcEnsemble, spec: &SystemSpec) -> (f64, f64) {
    let grid = ensemble.grid();
    let n = grid.n_points();
    let dx = grid.dx();
    let points = grid.points();
    let ks = grid.wavenumbers();
    let fft = Fft1d::new(n);
    let n_el = ensemble.n_electrons();
    let m = ensemble.n_walkers();
    let mut scratch: Vec<Complex64> = Vec::new();
    let mut samples = Vec::with_capacity(m);

    for k in 0..m {
        let mut e = 0.0;
        for i in 0..n_el {
            let wave = &ensemble.electron(i).waves[k];
            scratch.clear();
            scratch.extend_from_slice(wave);
            fft.forward(&mut scratch);
            let kin: f64 = scratch
                .iter()
                .zip(&ks)
                .map(|(c, &kw)| kw * kw * c.norm_sqr())
                .sum::<f64>()
                * 0.5
                * dx
                / n as f64;
            let conf: f64 = wave
                .iter()
                .zip(&points)
                .map(|(a, &x)| confinement_potential(x, spec) * a.norm_sqr())
                .sum::<f64>()
                * dx;
            e += kin + conf;
            for j in 0..i {
                let xi = ensemble.electron(i).walkers[k];
                let partner = &ensemble.electron(j).waves[k];
                e += partner
                    .iter()
                    .zip(&points)
                    .map(|(a, &xj)| soft_core_potential(xi, xj, spec) * a.norm_sqr())
                    .sum::<f64>()
                    * dx;
            }
        }
        samples.push(e);
    }
    sorted_mean_stderr(&samples)
}

pub fn energy_estimate(ensemble: &TdqmcEnsemble, spec: &SystemSpec) -> Result<EnergyEstimate> {
    let (e1, e1_stderr) = energy_mixed(ensemble, spec)?;
    let (e2, e2_stderr) = energy_wave(ensemble, spec);
    Ok(EnergyEstimate { e1, e1_stderr, e2, e2_stderr })
}
