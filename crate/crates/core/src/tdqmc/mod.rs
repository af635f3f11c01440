//! Guide-wave quantum Monte Carlo: per-walker 1D wave functions coupled
//! through a kernel-smoothed Monte Carlo interaction potential, with
//! drift-diffusion ground-state preparation and Bohmian real-time
//! guidance of the walkers.

mod effective;
mod energy;
mod ensemble;
mod prepare;
mod steps;

pub use effective::{compute_effective_potentials, effective_potential, kernel_weight};
pub use energy::{energy_estimate, energy_mixed, energy_wave, EnergyEstimate};
pub use ensemble::{
    canonical_order, init_ensemble, sorted_mean_stderr, sorted_sum, ElectronSet, TdqmcEnsemble,
    TdqmcParams,
};
pub use prepare::{prepare_ground_state, PrepareStage};
pub use steps::{
    guide_wave_step, real_time_step, step_all_waves, walker_drift_diffusion_step,
    GuideWavePropagator, ImaginaryStepParams, StepFlags,
};

/// Mean walker position per electron.
pub fn tdqmc_dipole(ensemble: &TdqmcEnsemble) -> Vec<f64> {
    ensemble.dipole()
}
