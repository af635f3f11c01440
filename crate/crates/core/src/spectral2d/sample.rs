//! Inverse-CDF sampling of configuration-space points from |Psi|²,
//! used to seed Bohmian trajectories.

use rand::RngExt;

use crate::error::{Error, Result};
use crate::model::RngStream;
use crate::spectral2d::wave::WaveFunction2D;

/// Draw K points distributed as |Psi(x1,x2)|²: marginal inverse CDF in
/// x1, then the conditional CDF along x2, with linear interpolation
/// inside cells centered on the grid points. Deterministic for a fixed
/// stream.
pub fn sample_density(wf: &WaveFunction2D, k: usize, stream: RngStream) -> Result<Vec<(f64, f64)>> {
    if k == 0 {
        return Err(Error::invalid("sample_density requires K >= 1"));
    }
    let grid = wf.grid();
    let (n1, n2) = (grid.axis1.n_points(), grid.axis2.n_points());
    let density: Vec<f64> = wf.amplitudes().iter().map(|a| a.norm_sqr()).collect();

    // Row masses (marginal over x2) and their cumulative sum.
    let mut row_mass = vec![0.0; n1];
    for i1 in 0..n1 {
        row_mass[i1] = density[grid.index(i1, 0)..grid.index(i1, n2 - 1) + 1].iter().sum();
    }
    let total: f64 = row_mass.iter().sum();
    if total <= 0.0 {
        return Err(Error::numerical("cannot sample from a zero wave function"));
    }
    let mut row_cdf = vec![0.0; n1 + 1];
    for i in 0..n1 {
        row_cdf[i + 1] = row_cdf[i] + row_mass[i] / total;
    }

    let mut rng = stream.rng();
    let mut points = Vec::with_capacity(k);
    for _ in 0..k {
        let u1: f64 = rng.random();
        let i1 = invert_cdf(&row_cdf, u1);
        let frac1 = (u1 - row_cdf[i1]) / (row_cdf[i1 + 1] - row_cdf[i1]).max(f64::MIN_POSITIVE);
        let x1 = grid.axis1.min() + (i1 as f64 + frac1 - 0.5) * grid.axis1.dx();

        // Conditional CDF along x2 within row i1.
        let row = &density[grid.index(i1, 0)..grid.index(i1, n2 - 1) + 1];
        let rtot: f64 = row.iter().sum();
        let mut cdf = vec![0.0; n2 + 1];
        for i in 0..n2 {
            cdf[i + 1] = cdf[i] + row[i] / rtot.max(f64::MIN_POSITIVE);
        }
        let u2: f64 = rng.random();
        let i2 = invert_cdf(&cdf, u2);
        let frac2 = (u2 - cdf[i2]) / (cdf[i2 + 1] - cdf[i2]).max(f64::MIN_POSITIVE);
        let x2 = grid.axis2.min() + (i2 as f64 + frac2 - 0.5) * grid.axis2.dx();
        points.push((x1, x2));
    }
    Ok(points)
}

fn invert_cdf(cdf: &[f64], u: f64) -> usize {
    // cdf has n+1 entries, monotone from 0 to 1; find the cell containing u.
    let n = cdf.len() - 1;
    match cdf.binary_search_by(|v| v.partial_cmp(&u).unwrap()) {
        Ok(i) => i.min(n - 1),
        Err(i) => i.saturating_sub(1).min(n - 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Grid1D, Grid2D};

    fn gaussian() -> WaveFunction2D {
        let g = Grid2D::square(Grid1D::new(256, 20.0).unwrap());
        WaveFunction2D::gaussian(g, 1.0).unwrap()
    }

    #[test]
    fn sampled_moments_match_gaussian() {
        let wf = gaussian();
        let k = 10_000;
        let pts = sample_density(&wf, k, RngStream::new(42, 900)).unwrap();
        let mean: f64 = pts.iter().map(|p| p.0).sum::<f64>() / k as f64;
        let var: f64 = pts.iter().map(|p| p.0 * p.0).sum::<f64>() / k as f64 - mean * mean;
        // Var = w²/2 = 0.5; stderr of the variance estimate is about
        // sqrt(2/K) * var ≈ 0.007, so 3 sigma ≈ 0.021.
        let sigma_stat = 0.5 * (2.0 / k as f64).sqrt();
        assert!((var - 0.5).abs() < 3.0 * sigma_stat, "var = {var}");
        // Mean: stderr = sqrt(var/K).
        let mean_err = (0.5_f64 / k as f64).sqrt();
        assert!(mean.abs() < 3.0 * mean_err, "mean = {mean}");
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let wf = gaussian();
        let a = sample_density(&wf, 100, RngStream::new(7, 3)).unwrap();
        let b = sample_density(&wf, 100, RngStream::new(7, 3)).unwrap();
        assert_eq!(a, b);
        let c = sample_density(&wf, 100, RngStream::new(7, 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_k_rejected() {
        assert!(sample_density(&gaussian(), 0, RngStream::new(1, 1)).is_err());
    }
}
