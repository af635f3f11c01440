//! Per-step updates: split-step propagation of the 1D guide waves,
//! imaginary-time walker drift-diffusion, and real-time Bohmian guidance.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fourier::{eval_spectral, Fft1d};
use crate::model::{confinement_potential, FieldSpec, Grid1D, RngStream, StreamPurpose, SystemSpec};
use crate::spectral2d::PropagationMode;
use crate::tdqmc::effective::{compute_effective_potentials, effective_potential};
use crate::tdqmc::ensemble::{normalize_wave, TdqmcEnsemble, TdqmcParams};

const NODE_GUARD: f64 = 1e-12;

/// Split-step engine for the guide waves. The kinetic factor and the
/// confinement samples are precomputed; the walker-dependent effective
/// potential and the field enter per call.
pub struct GuideWavePropagator {
    grid: Grid1D,
    dt: f64,
    mode: PropagationMode,
    kinetic_factor: Vec<Complex64>,
    confinement: Vec<f64>,
    fft: Fft1d,
}

impl GuideWavePropagator {
    pub fn new(grid: &Grid1D, spec: &SystemSpec, dt: f64, mode: PropagationMode) -> Self {
        let kinetic_factor = grid
            .wavenumbers()
            .iter()
            .map(|&k| match mode {
                PropagationMode::Real => Complex64::from_polar(1.0, -0.5 * k * k * dt),
                PropagationMode::Imaginary => Complex64::new((-0.5 * k * k * dt).exp(), 0.0),
            })
            .collect();
        let confinement = grid.points().iter().map(|&x| confinement_potential(x, spec)).collect();
        GuideWavePropagator {
            grid: *grid,
            dt,
            mode,
            kinetic_factor,
            confinement,
            fft: Fft1d::new(grid.n_points()),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mode(&self) -> PropagationMode {
        self.mode
    }

    /// One split step of a single guide wave. `field_mid` is the field
    /// value for this electron at mid-step (its potential is -E x);
    /// imaginary mode ignores it and renormalizes afterwards.
    pub fn step_wave(&self, wave: &mut [Complex64], veff: &[f64], field_mid: f64) -> Result<()> {
        let n = self.grid.n_points();
        debug_assert_eq!(wave.len(), n);
        debug_assert_eq!(veff.len(), n);
        let points = self.grid.points();
        let half: Vec<Complex64> = (0..n)
            .map(|m| {
                let pot = self.confinement[m] + veff[m] - field_mid * points[m];
                match self.mode {
                    PropagationMode::Real => Complex64::from_polar(1.0, -0.5 * pot * self.dt),
                    PropagationMode::Imaginary => Complex64::new((-0.5 * pot * self.dt).exp(), 0.0),
                }
            })
            .collect();

        for (a, h) in wave.iter_mut().zip(&half) {
            *a *= h;
        }
        self.fft.forward(wave);
        for (a, f) in wave.iter_mut().zip(&self.kinetic_factor) {
            *a *= f;
        }
        self.fft.inverse(wave);
        for (a, h) in wave.iter_mut().zip(&half) {
            *a *= h;
        }

        if self.mode == PropagationMode::Imaginary {
            normalize_wave(wave, self.grid.dx());
        }
        if wave.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::numerical("guide wave diverged (NaN or infinity)"));
        }
        Ok(())
    }
}

/// Advance every guide wave by one step against the step-start walker
/// snapshot. Does not touch walkers or the clock.
pub fn step_all_waves(
    ensemble: &mut TdqmcEnsemble,
    spec: &SystemSpec,
    prop: &GuideWavePropagator,
    fields: Option<&FieldSpec>,
) -> Result<()> {
    let veffs = compute_effective_potentials(ensemble, spec);
    let t_mid = ensemble.time + 0.5 * prop.dt();
    for i in 0..ensemble.n_electrons() {
        let field_mid = match (prop.mode(), fields) {
            (PropagationMode::Real, Some(f)) => f.value(t_mid, i),
            _ => 0.0,
        };
        let set = ensemble.electron_mut(i);
        for (k, wave) in set.waves.iter_mut().enumerate() {
            let row = veffs[i].row(k);
            prop.step_wave(wave, row.to_slice().expect("contiguous row"), field_mid)?;
        }
    }
    Ok(())
}

/// One-shot step of a single guide wave (i, k). The batched paths above
/// are what the preparation and real-time loops use.
pub fn guide_wave_step(
    ensemble: &mut TdqmcEnsemble,
    spec: &SystemSpec,
    i: usize,
    k: usize,
    dt: f64,
    mode: PropagationMode,
    fields: Option<&FieldSpec>,
) -> Result<()> {
    let prop = GuideWavePropagator::new(ensemble.grid(), spec, dt, mode);
    let veff = effective_potential(ensemble, spec, i, k);
    let t_mid = ensemble.time + 0.5 * dt;
    let field_mid = match (mode, fields) {
        (PropagationMode::Real, Some(f)) => f.value(t_mid, i),
        _ => 0.0,
    };
    prop.step_wave(&mut ensemble.electron_mut(i).waves[k], &veff, field_mid)
}

/// Knobs of one imaginary-time walker move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImaginaryStepParams {
    pub dtau: f64,
    /// Diffusion coefficient D; the Gaussian increment has std sqrt(2 D dtau).
    pub diffusion: f64,
    pub include_drift: bool,
}

impl From<&TdqmcParams> for ImaginaryStepParams {
    fn from(p: &TdqmcParams) -> Self {
        ImaginaryStepParams { dtau: p.dtau, diffusion: p.diffusion, include_drift: p.include_drift }
    }
}

fn wave_coeffs(fft: &Fft1d, wave: &[Complex64], scratch: &mut Vec<Complex64>) -> f64 {
    scratch.clear();
    scratch.extend_from_slice(wave);
    let max_density = wave.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    fft.forward(scratch);
    max_density
}

/// Im[phi'/phi] at x, or None below the node guard.
fn flow_velocity(coeffs: &[Complex64], grid: &Grid1D, x: f64, max_density: f64) -> Option<f64> {
    let (v, d1, _) = eval_spectral(coeffs, grid, x);
    if v.norm_sqr() < NODE_GUARD * max_density {
        return None;
    }
    Some((d1 / v).im)
}

/// Re[phi'/phi] at x, or None below the node guard.
fn drift_velocity(coeffs: &[Complex64], grid: &Grid1D, x: f64, max_density: f64) -> Option<f64> {
    let (v, d1, _) = eval_spectral(coeffs, grid, x);
    if v.norm_sqr() < NODE_GUARD * max_density {
        return None;
    }
    Some((d1 / v).re)
}

fn reflect_into(grid: &Grid1D, mut x: f64) -> f64 {
    let (lo, hi) = (grid.min(), grid.max());
    for _ in 0..64 {
        if x < lo {
            x = 2.0 * lo - x;
        } else if x > hi {
            x = 2.0 * hi - x;
        } else {
            return x;
        }
    }
    x.clamp(lo, hi)
}

/// One drift-diffusion move of every walker. Each (electron, walker,
/// step) triple owns a private RNG stream, so the result is independent
/// of evaluation order; walkers reflect off the grid edges.
pub fn walker_drift_diffusion_step(ensemble: &mut TdqmcEnsemble, params: &ImaginaryStepParams) {
    let grid = *ensemble.grid();
    let fft = Fft1d::new(grid.n_points());
    let noise_std = (2.0 * params.diffusion * params.dtau).sqrt();
    let master = ensemble.master_seed;
    let step = ensemble.step_count;
    let mut scratch = Vec::new();

    for i in 0..ensemble.n_electrons() {
        let set = ensemble.electron_mut(i);
        let mut next = Vec::with_capacity(set.walkers.len());
        for (k, &x) in set.walkers.iter().enumerate() {
            let drift = if params.include_drift {
                let max_density = wave_coeffs(&fft, &set.waves[k], &mut scratch);
                drift_velocity(&scratch, &grid, x, max_density).unwrap_or(0.0)
            } else {
                0.0
            };
            let mut rng = RngStream::for_walker_step(master, StreamPurpose::WalkerNoise, i, k, step).rng();
            let eta: f64 = StandardNormal.sample(&mut rng);
            next.push(reflect_into(&grid, x + drift * params.dtau + eta * noise_std));
        }
        set.walkers = next;
    }
    ensemble.step_count += 1;
}

/// Counts of guarded samples during one real-time step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepFlags {
    /// Velocity evaluations that fell below the node guard.
    pub node_guard: usize,
    /// Walkers that tried to leave the grid and were clamped.
    pub left_grid: usize,
}

impl StepFlags {
    pub fn merge(&mut self, other: StepFlags) {
        self.node_guard += other.node_guard;
        self.left_grid += other.left_grid;
    }
}

/// One real-time step: waves advance by split-step, then each walker
/// moves with its own guide wave's flow velocity (midpoint rule over the
/// old and new wave).
pub fn real_time_step(
    ensemble: &mut TdqmcEnsemble,
    spec: &SystemSpec,
    prop: &GuideWavePropagator,
    fields: Option<&FieldSpec>,
) -> Result<StepFlags> {
    if prop.mode() != PropagationMode::Real {
        return Err(Error::invalid("real_time_step needs a real-mode propagator"));
    }
    let grid = *ensemble.grid();
    let fft = Fft1d::new(grid.n_points());
    let dt = prop.dt();
    let mut flags = StepFlags::default();
    let mut scratch = Vec::new();

    let mut v_old: Vec<Vec<f64>> = Vec::with_capacity(ensemble.n_electrons());
    for i in 0..ensemble.n_electrons() {
        let set = ensemble.electron(i);
        let v = set
            .walkers
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let max_density = wave_coeffs(&fft, &set.waves[k], &mut scratch);
                flow_velocity(&scratch, &grid, x, max_density).unwrap_or_else(|| {
                    flags.node_guard += 1;
                    set.last_velocity[k]
                })
            })
            .collect();
        v_old.push(v);
    }

    step_all_waves(ensemble, spec, prop, fields)?;

    for i in 0..ensemble.n_electrons() {
        let set = ensemble.electron_mut(i);
        for k in 0..set.walkers.len() {
            let x = set.walkers[k];
            let max_density = wave_coeffs(&fft, &set.waves[k], &mut scratch);
            let x_pred = (x + v_old[i][k] * dt).clamp(grid.min(), grid.max());
            let v_new = flow_velocity(&scratch, &grid, x_pred, max_density).unwrap_or_else(|| {
                flags.node_guard += 1;
                v_old[i][k]
            });
            let v_used = 0.5 * (v_old[i][k] + v_new);
            let mut x_next = x + v_used * dt;
            if !grid.contains(x_next) {
                flags.left_grid += 1;
                x_next = x_next.clamp(grid.min(), grid.max());
            }
            set.walkers[k] = x_next;
            set.last_velocity[k] = v_used;
        }
    }
    ensemble.time += dt;
    Ok(flags)
}
