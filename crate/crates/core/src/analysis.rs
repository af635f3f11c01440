//! Experiment-level computations: the nonlocality-length sweep with its
//! polynomial-fit minimum, the analytic driven-oscillator reference
//! dipole, and the idler-amplitude ratio.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{FieldChannel, RngStream, StreamPurpose, SystemSpec};
use crate::spectral2d::{DipoleSeries, TrajectorySet};
use crate::tdqmc::{init_ensemble, prepare_ground_state, TdqmcParams};

/// One converged (or failed) ground-state run of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    /// Wave-only energy estimate; NaN when the run did not converge.
    pub energy: f64,
    pub stderr: f64,
    pub seed: u64,
    pub n_walkers: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn new(mut rows: Vec<SweepRow>) -> Result<Self> {
        rows.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
        for pair in rows.windows(2) {
            if pair[0].sigma >= pair[1].sigma {
                return Err(Error::invalid(format!("duplicate sweep point sigma = {}", pair[0].sigma)));
            }
        }
        if rows.iter().any(|r| r.stderr < 0.0) {
            return Err(Error::invalid("negative standard error in sweep row"));
        }
        Ok(SweepTable { rows })
    }

    pub fn rows(&self) -> &[SweepRow] {
        &self.rows
    }

    /// (sigma, energy) of the converged rows.
    pub fn converged_points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.converged).map(|r| (r.sigma, r.energy)).collect()
    }
}

/// Seed for one sweep point: derived from the master seed and the rank of
/// sigma among the swept values, so rows do not depend on list order.
fn point_seed(master_seed: u64, rank: usize) -> u64 {
    use rand::RngExt;
    let mut rng = RngStream::for_walker(master_seed, StreamPurpose::SweepPoint, 8, rank).rng();
    rng.random()
}

/// Ground-state energy at each sigma, with an independent seed per point.
/// Non-converged points are kept in the table but flagged.
pub fn sigma_sweep(
    sigmas: &[f64],
    base: &TdqmcParams,
    spec: &SystemSpec,
    master_seed: u64,
) -> Result<SweepTable> {
    if sigmas.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::invalid("sweep sigma values must be > 0"));
    }
    let mut sorted = sigmas.to_vec();
    sorted.sort_by(f64::total_cmp);

    // Points are independent jobs with their own seeds; the merge order
    // is fixed by sigma rank, so the table is identical for any number
    // of worker threads.
    use rayon::prelude::*;
    let rows: Vec<SweepRow> = sorted
        .par_iter()
        .enumerate()
        .map(|(rank, &sigma)| {
            let seed = point_seed(master_seed, rank);
            let params = TdqmcParams { sigma: vec![sigma; spec.n_electrons], ..base.clone() };
            let mut ens = init_ensemble(&params, spec, RngStream::new(seed, 0))?;
            match prepare_ground_state(&mut ens, spec, &params, None) {
                Ok(est) => Ok(SweepRow {
                    sigma,
                    energy: est.e2,
                    stderr: est.e2_stderr,
                    seed,
                    n_walkers: params.n_walkers,
                    converged: true,
                }),
                Err(Error::Numerical(_)) => Ok(SweepRow {
                    sigma,
                    energy: f64::NAN,
                    stderr: 0.0,
                    seed,
                    n_walkers: params.n_walkers,
                    converged: false,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    SweepTable::new(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub degree: usize,
    /// Ascending powers: E(sigma) ~ sum_j coefficients[j] sigma^j.
    pub coefficients: Vec<f64>,
    /// Argmin of the fit, clamped to the swept range.
    pub sigma_star: f64,
    pub e_star: f64,
    pub residual_norm: f64,
    pub condition: f64,
    /// Curvature at the minimum below tolerance: argmin is not unique.
    pub flat: bool,
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(j, &c)| j as f64 * c).collect()
}

const FLAT_CURVATURE: f64 = 1e-6;
const MAX_CONDITION: f64 = 1e12;

/// Ordinary least squares fit of the converged sweep points, then the
/// argmin of the fitted polynomial inside the swept range (closed form
/// for degree 2, dense scan plus ternary refinement otherwise).
pub fn polyfit_min(table: &SweepTable, degree: usize) -> Result<FitResult> {
    let points = table.converged_points();
    if points.len() < degree + 1 {
        return Err(Error::invalid(format!(
            "degree-{degree} fit needs {} points, got {}",
            degree + 1,
            points.len()
        )));
    }
    let (lo, hi) = (points[0].0, points[points.len() - 1].0);

    let vander = DMatrix::from_fn(points.len(), degree + 1, |r, c| points[r].0.powi(c as i32));
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let svd = vander.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::numerical(format!("ill-conditioned fit (condition number {condition:.3e})")));
    }
    let coeffs: Vec<f64> = svd
        .solve(&y, 0.0)
        .map_err(Error::numerical)?
        .iter()
        .copied()
        .collect();
    let residual_norm = (&vander * DVector::from_column_slice(&coeffs) - &y).norm();

    let sigma_star = if degree == 2 && coeffs[2] > 0.0 {
        (-coeffs[1] / (2.0 * coeffs[2])).clamp(lo, hi)
    } else {
        // Dense scan for the global bracket, then ternary refinement.
        let scan = 2000;
        let mut best = (f64::INFINITY, lo);
        for s in 0..=scan {
            let x = lo + (hi - lo) * s as f64 / scan as f64;
            let v = poly_eval(&coeffs, x);
            if v < best.0 {
                best = (v, x);
            }
        }
        let h = (hi - lo) / scan as f64;
        let (mut a, mut b) = ((best.1 - h).max(lo), (best.1 + h).min(hi));
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if poly_eval(&coeffs, m1) < poly_eval(&coeffs, m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        0.5 * (a + b)
    };

    let d2 = poly_derivative(&poly_derivative(&coeffs));
    let flat = poly_eval(&d2, sigma_star).abs() < FLAT_CURVATURE;

    Ok(FitResult {
        degree,
        e_star: poly_eval(&coeffs, sigma_star),
        coefficients: coeffs,
        sigma_star,
        residual_norm,
        condition,
        flat,
    })
}

/// Mean position of a driven harmonic oscillator, x(0) = v(0) = 0:
/// x'' = -2c x + E(t). Closed form for a plain sine drive switched on at
/// t = 0 (secular form at resonance), fourth-order Runge-Kutta otherwise.
pub fn ehrenfest_oracle(
    channel: &FieldChannel,
    confinement: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(confinement > 0.0) {
        return Err(Error::invalid("confinement strength must be > 0"));
    }
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::invalid("oracle needs dt > 0 and t_end >= 0"));
    }
    let omega_sq = 2.0 * confinement;
    let n_steps = (t_end / dt).round() as usize;
    let plain_sine = channel.phase == 0.0 && channel.t_on <= 0.0;

    if plain_sine {
        let (e0, w0) = (channel.amplitude, channel.omega);
        let big = omega_sq.sqrt();
        let closed: Box<dyn Fn(f64) -> f64> = if (omega_sq - w0 * w0).abs() > 1e-9 {
            let amp_p = e0 / (omega_sq - w0 * w0);
            let amp_h = -amp_p * w0 / big;
            Box::new(move |t| amp_p * (w0 * t).sin() + amp_h * (big * t).sin())
        } else {
            Box::new(move |t| e0 / (2.0 * omega_sq) * (big * t).sin() - e0 / (2.0 * big) * t * (big * t).cos())
        };
        return Ok((0..=n_steps).map(|s| (s as f64 * dt, closed(s as f64 * dt))).collect());
    }

    let accel = |t: f64, x: f64| -omega_sq * x + channel.value(t);
    let mut out = Vec::with_capacity(n_steps + 1);
    let (mut x, mut v, mut t) = (0.0, 0.0, 0.0);
    out.push((t, x));
    for _ in 0..n_steps {
        let (k1x, k1v) = (v, accel(t, x));
        let (k2x, k2v) = (v + 0.5 * dt * k1v, accel(t + 0.5 * dt, x + 0.5 * dt * k1x));
        let (k3x, k3v) = (v + 0.5 * dt * k2v, accel(t + 0.5 * dt, x + 0.5 * dt * k2x));
        let (k4x, k4v) = (v + dt * k3v, accel(t + dt, x + dt * k3x));
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        t += dt;
        out.push((t, x));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdlerRatio {
    pub ratio: f64,
    /// Denominator was zero (no idler motion at all in the reference run).
    pub infinite: bool,
}

/// Peak idler dipole of the interacting run over the peak single-trajectory
/// idler excursion of the non-interacting run. Both inputs are expected to
/// be collapse-subtracted already.
pub fn idler_ratio(interacting: &DipoleSeries, nonint: &TrajectorySet) -> IdlerRatio {
    let num = interacting.max_abs_d2();
    let den = nonint.max_idler_deviation();
    if den == 0.0 {
        IdlerRatio { ratio: f64::INFINITY, infinite: true }
    } else {
        IdlerRatio { ratio: num / den, infinite: false }
    }
}
