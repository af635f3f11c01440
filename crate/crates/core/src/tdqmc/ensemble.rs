//! The TDQMC state: per electron, M guide waves on a shared 1D grid and
//! M point walkers, coupled through the Monte Carlo effective potential.

use num_complex::Complex64;
use rand::RngExt;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{Grid1D, RngStream, StreamPurpose, SystemSpec};

/// Run parameters for the guide-wave engine.
#[derive(Debug, Clone, PartialEq)]
pub struct TdqmcParams {
    /// Walkers (and guide waves) per electron.
    pub n_walkers: usize,
    pub grid: Grid1D,
    /// Nonlocality length per electron.
    pub sigma: Vec<f64>,
    /// Width of the initial Gaussian guide waves.
    pub init_width: f64,
    /// Imaginary-time step.
    pub dtau: f64,
    /// Real-time step.
    pub dt: f64,
    /// Walker diffusion coefficient D; noise std per step is sqrt(2 D dtau).
    pub diffusion: f64,
    /// Apply the drift term of the walker update (the self-consistent
    /// reading); false gives the purely variational no-drift mode.
    pub include_drift: bool,
    /// Stage-1 steps (joint wave/walker imaginary-time propagation).
    pub stage1_steps: usize,
    /// Stage-2 stops when E2 changes less than this between strides.
    pub stage2_tol: f64,
    pub stage2_max_steps: usize,
}

impl Default for TdqmcParams {
    fn default() -> Self {
        TdqmcParams {
            n_walkers: 1000,
            grid: Grid1D::new(128, 20.0).expect("static grid"),
            sigma: vec![0.82, 0.82],
            init_width: 1.0,
            dtau: 0.01,
            dt: 0.002,
            diffusion: 0.5,
            include_drift: true,
            stage1_steps: 600,
            stage2_tol: 1e-7,
            stage2_max_steps: 20_000,
        }
    }
}

impl TdqmcParams {
    pub fn validate(&self, spec: &SystemSpec) -> Result<()> {
        if self.n_walkers < 1 {
            return Err(Error::invalid("n_walkers must be >= 1"));
        }
        if self.sigma.len() != spec.n_electrons {
            return Err(Error::invalid("sigma list must have one entry per electron"));
        }
        if self.sigma.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid("sigma must be > 0"));
        }
        if !(self.init_width > 0.0) {
            return Err(Error::invalid("init_width must be > 0"));
        }
        if !(self.dtau > 0.0) || !(self.dt > 0.0) {
            return Err(Error::invalid("time steps must be > 0"));
        }
        if !(self.diffusion > 0.0) {
            return Err(Error::invalid("diffusion coefficient must be > 0"));
        }
        Ok(())
    }
}

/// Guide waves and walkers of one electron.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectronSet {
    /// waves[k][m]: guide wave of walker k sampled on the grid.
    pub waves: Vec<Vec<Complex64>>,
    /// walkers[k]: position of walker k.
    pub walkers: Vec<f64>,
    pub sigma: f64,
    /// Velocity reused when the node guard trips during real-time guidance.
    pub last_velocity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdqmcEnsemble {
    grid: Grid1D,
    electrons: Vec<ElectronSet>,
    n_walkers: usize,
    /// Real time, or accumulated tau during imaginary-time preparation.
    pub time: f64,
    /// Stochastic step counter; part of the RNG stream key.
    pub step_count: u64,
    pub master_seed: u64,
}

impl TdqmcEnsemble {
    pub fn from_parts(
        grid: Grid1D,
        electrons: Vec<ElectronSet>,
        time: f64,
        step_count: u64,
        master_seed: u64,
    ) -> Result<Self> {
        if electrons.is_empty() {
            return Err(Error::invalid("ensemble needs at least one electron"));
        }
        let m = electrons[0].walkers.len();
        for set in &electrons {
            if set.walkers.len() != m || set.waves.len() != m || set.last_velocity.len() != m {
                return Err(Error::invalid("all electrons must carry the same walker count"));
            }
            if set.waves.iter().any(|w| w.len() != grid.n_points()) {
                return Err(Error::invalid("guide wave length does not match the grid"));
            }
        }
        Ok(TdqmcEnsemble { grid, electrons, n_walkers: m, time, step_count, master_seed })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn n_electrons(&self) -> usize {
        self.electrons.len()
    }

    pub fn n_walkers(&self) -> usize {
        self.n_walkers
    }

    pub fn electron(&self, i: usize) -> &ElectronSet {
        &self.electrons[i]
    }

    pub fn electron_mut(&mut self, i: usize) -> &mut ElectronSet {
        &mut self.electrons[i]
    }

    pub fn renormalize_waves(&mut self) {
        let dx = self.grid.dx();
        for set in &mut self.electrons {
            for wave in &mut set.waves {
                normalize_wave(wave, dx);
            }
        }
    }

    /// Largest deviation of any guide-wave norm from 1.
    pub fn max_norm_defect(&self) -> f64 {
        let dx = self.grid.dx();
        self.electrons
            .iter()
            .flat_map(|s| s.waves.iter())
            .map(|w| (wave_norm_sq(w, dx).sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Mean walker position per electron. Summed in canonical order so
    /// the value is bit-identical under walker relabeling.
    pub fn dipole(&self) -> Vec<f64> {
        self.electrons
            .iter()
            .map(|s| sorted_sum(s.walkers.iter().copied()) / self.n_walkers as f64)
            .collect()
    }

    /// Apply one permutation to walkers and waves of every electron
    /// (test helper for the relabeling invariants).
    pub fn permute_walkers(&mut self, perm: &[usize]) {
        assert_eq!(perm.len(), self.n_walkers);
        for set in &mut self.electrons {
            set.waves = perm.iter().map(|&k| set.waves[k].clone()).collect();
            set.walkers = perm.iter().map(|&k| set.walkers[k]).collect();
            set.last_velocity = perm.iter().map(|&k| set.last_velocity[k]).collect();
        }
    }
}

pub(crate) fn wave_norm_sq(wave: &[Complex64], dx: f64) -> f64 {
    wave.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx
}

pub(crate) fn normalize_wave(wave: &mut [Complex64], dx: f64) {
    let n = wave_norm_sq(wave, dx).sqrt();
    if n > 0.0 {
        let s = 1.0 / n;
        for a in wave.iter_mut() {
            *a *= s;
        }
    }
}

/// Indices sorted by walker position: the canonical reduction order that
/// makes sums independent of walker labels.
pub fn canonical_order(walkers: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..walkers.len()).collect();
    idx.sort_by(|&a, &b| walkers[a].total_cmp(&walkers[b]));
    idx
}

/// Sum after sorting by value; the result depends only on the multiset.
pub fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Mean and standard error via a canonical-order reduction.
pub fn sorted_mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = sorted_sum(values.iter().copied()) / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = sorted_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Fresh ensemble: every guide wave is the normalized width-w Gaussian,
/// walkers are drawn from its density (std w/sqrt(2)), one RNG stream per
/// (electron, walker).
pub fn init_ensemble(params: &TdqmcParams, spec: &SystemSpec, seed: RngStream) -> Result<TdqmcEnsemble> {
    params.validate(spec)?;
    let grid = params.grid;
    let dx = grid.dx();
    let w = params.init_width;
    let mut template: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|&x| Complex64::new((-x * x / (2.0 * w * w)).exp(), 0.0))
        .collect();
    normalize_wave(&mut template, dx);

    let dist = Normal::new(0.0, w / 2.0_f64.sqrt())
        .map_err(|e| Error::invalid(format!("bad walker distribution: {e}")))?;
    let m = params.n_walkers;
    let electrons = (0..spec.n_electrons)
        .map(|i| {
            let walkers: Vec<f64> = (0..m)
                .map(|k| {
                    let mut rng =
                        RngStream::for_walker(seed.master_seed, StreamPurpose::InitWalkers, i, k).rng();
                    // Skip the stream-offset words so substreams decorrelate.
                    let _: u64 = rng.random();
                    let mut x = dist.sample(&mut rng);
                    while !grid.contains(x) {
                        x = dist.sample(&mut rng);
                    }
                    x
                })
                .collect();
            ElectronSet {
                waves: vec![template.clone(); m],
                walkers,
                sigma: params.sigma[i],
                last_velocity: vec![0.0; m],
            }
        })
        .collect();
    TdqmcEnsemble::from_parts(grid, electrons, 0.0, 0, seed.master_seed)
}
