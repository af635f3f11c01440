//! The Monte Carlo effective potential: for each electron i and walker k,
//! a kernel-weighted average of the pair potential over the partner
//! electron's walker cloud.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{soft_core_potential, SystemSpec};
use crate::tdqmc::ensemble::{canonical_order, TdqmcEnsemble};

/// Gaussian nonlocality kernel exp(-|x - x_ref|²/(2 sigma²)), in (0, 1].
pub fn kernel_weight(x: f64, x_ref: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("kernel sigma must be > 0, got {sigma}")));
    }
    let d = x - x_ref;
    Ok((-d * d / (2.0 * sigma * sigma)).exp())
}

/// All effective potentials for one step, from an immutable snapshot of
/// the walker positions. Result: per electron i an (M, n) array whose row
/// k is V_eff^k sampled on the grid.
///
/// Partner walkers are folded in canonical (sorted) order, so the values
/// are bit-identical under walker relabeling.
pub fn compute_effective_potentials(
    ensemble: &TdqmcEnsemble,
    spec: &SystemSpec,
) -> Vec<Array2<f64>> {
    let n = ensemble.grid().n_points();
    let m = ensemble.n_walkers();
    let n_el = ensemble.n_electrons();
    let points = ensemble.grid().points();

    if !spec.interaction_on {
        return vec![Array2::zeros((m, n)); n_el];
    }

    (0..n_el)
        .map(|i| {
            let mut veff = Array2::<f64>::zeros((m, n));
            for j in 0..n_el {
                if j == i {
                    continue;
                }
                let partner = ensemble.electron(j);
                let order = canonical_order(&partner.walkers);
                let sorted: Vec<f64> = order.iter().map(|&l| partner.walkers[l]).collect();
                let sigma = partner.sigma;

                // V[l][x]: pair potential between grid point x and the
                // l-th (sorted) partner walker.
                let mut vmat = Array2::<f64>::zeros((m, n));
                for (l, &xl) in sorted.iter().enumerate() {
                    let row = vmat.row_mut(l);
                    let row = row.into_slice().expect("contiguous row");
                    for (x, v) in points.iter().zip(row.iter_mut()) {
                        *v = soft_core_potential(*x, xl, spec);
                    }
                }

                // W[k][l]: normalized kernel weights around partner
                // walker k. A walker always weights itself, so Z >= 1.
                let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
                let mut weights = Array2::<f64>::zeros((m, m));
                for k in 0..m {
                    let xk = partner.walkers[k];
                    let row = weights.row_mut(k);
                    let row = row.into_slice().expect("contiguous row");
                    let mut z = 0.0;
                    for (w, &xl) in row.iter_mut().zip(&sorted) {
                        let d = xl - xk;
                        *w = (-d * d * inv_two_sigma_sq).exp();
                        z += *w;
                    }
                    let inv_z = 1.0 / z;
                    for w in row.iter_mut() {
                        *w *= inv_z;
                    }
                }
                veff += &weights.dot(&vmat);
            }
            veff
        })
        .collect()
}

/// V_eff for a single (electron, walker) pair; the per-step engine uses
/// the batched form above, this is the one-shot query.
pub fn effective_potential(
    ensemble: &TdqmcEnsemble,
    spec: &SystemSpec,
    electron: usize,
    walker: usize,
) -> Vec<f64> {
    let all = compute_effective_potentials(ensemble, spec);
    all[electron].row(walker).to_vec()
}
