//! Two-stage ground-state preparation: joint imaginary-time relaxation of
//! waves and walkers, then continued wave relaxation with the walkers
//! frozen until the wave-only energy is stationary.

use crate::error::{Error, Result};
use crate::model::SystemSpec;
use crate::spectral2d::PropagationMode;
use crate::tdqmc::effective::compute_effective_potentials;
use crate::tdqmc::energy::{energy_estimate, energy_wave, EnergyEstimate};
use crate::tdqmc::ensemble::{TdqmcEnsemble, TdqmcParams};
use crate::tdqmc::steps::{
    step_all_waves, walker_drift_diffusion_step, GuideWavePropagator, ImaginaryStepParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrepareStage {
    /// Stage 1: waves and walkers relax together.
    JointRelaxation,
    /// Stage 2: walkers frozen, waves keep relaxing.
    FrozenWalkers,
}

/// Steps between stage-2 energy checks.
const STAGE2_STRIDE: usize = 50;

/// Relax the ensemble to its ground state. The observer, when given, is
/// called after every step with the current state and stage.
pub fn prepare_ground_state(
    ensemble: &mut TdqmcEnsemble,
    spec: &SystemSpec,
    params: &TdqmcParams,
    mut observer: Option<&mut dyn FnMut(&TdqmcEnsemble, PrepareStage)>,
) -> Result<EnergyEstimate> {
    params.validate(spec)?;
    let prop = GuideWavePropagator::new(ensemble.grid(), spec, params.dtau, PropagationMode::Imaginary);
    let walker_params = ImaginaryStepParams::from(params);

    for _ in 0..params.stage1_steps {
        step_all_waves(ensemble, spec, &prop, None)?;
        walker_drift_diffusion_step(ensemble, &walker_params);
        ensemble.time += params.dtau;
        if let Some(obs) = observer.as_deref_mut() {
            obs(ensemble, PrepareStage::JointRelaxation);
        }
    }

    // Walker positions are frozen from here on, so the effective
    // potentials are constant and computed once.
    let veffs = compute_effective_potentials(ensemble, spec);
    let (mut prev_e2, _) = energy_wave(ensemble, spec);
    let mut steps_done = 0;
    loop {
        for _ in 0..STAGE2_STRIDE {
            for i in 0..ensemble.n_electrons() {
                let set = ensemble.electron_mut(i);
                for (k, wave) in set.waves.iter_mut().enumerate() {
                    let row = veffs[i].row(k);
                    prop.step_wave(wave, row.to_slice().expect("contiguous row"), 0.0)?;
                }
            }
            ensemble.time += params.dtau;
            steps_done += 1;
            if let Some(obs) = observer.as_deref_mut() {
                obs(ensemble, PrepareStage::FrozenWalkers);
            }
        }
        let (e2, _) = energy_wave(ensemble, spec);
        let delta = (e2 - prev_e2).abs();
        if delta < params.stage2_tol {
            break;
        }
        if steps_done >= params.stage2_max_steps {
            return Err(Error::numerical(format!(
                "stage 2 energy not stationary after {steps_done} steps (last change {delta:.3e})"
            )));
        }
        prev_e2 = e2;
    }

    energy_estimate(ensemble, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Grid1D, RngStream};
    use crate::tdqmc::ensemble::init_ensemble;

    fn params(m: usize) -> TdqmcParams {
        TdqmcParams {
            n_walkers: m,
            grid: Grid1D::new(128, 20.0).unwrap(),
            init_width: 2.0,
            stage1_steps: 150,
            ..TdqmcParams::default()
        }
    }

    #[test]
    fn noninteracting_relaxation_reaches_unit_energy() {
        let spec = SystemSpec::default().without_interaction();
        let p = params(8);
        let mut ens = init_ensemble(&p, &spec, RngStream::new(42, 0)).unwrap();
        let est = prepare_ground_state(&mut ens, &spec, &p, None).unwrap();
        assert!((est.e2 - 1.0).abs() < 1e-3, "E2 = {}", est.e2);
        assert!((est.e1 - 1.0).abs() < 1e-3, "E1 = {}", est.e1);
    }

    #[test]
    fn stage2_keeps_walkers_bit_identical() {
        let spec = SystemSpec::default();
        let p = params(8);
        let mut ens = init_ensemble(&p, &spec, RngStream::new(42, 0)).unwrap();
        let mut stage1_final: Option<Vec<f64>> = None;
        let mut obs = |e: &TdqmcEnsemble, stage: PrepareStage| {
            if stage == PrepareStage::JointRelaxation {
                stage1_final = Some(e.electron(0).walkers.clone());
            }
        };
        prepare_ground_state(&mut ens, &spec, &p, Some(&mut obs)).unwrap();
        assert_eq!(stage1_final.unwrap(), ens.electron(0).walkers);
    }

    #[test]
    fn nonconvergence_is_an_error() {
        let spec = SystemSpec::default();
        let mut p = params(4);
        p.stage2_tol = 0.0;
        p.stage2_max_steps = 100;
        let mut ens = init_ensemble(&p, &spec, RngStream::new(42, 0)).unwrap();
        assert!(prepare_ground_state(&mut ens, &spec, &p, None).is_err());
    }

    #[test]
    fn preparation_is_seed_deterministic() {
        let spec = SystemSpec::default();
        let mut p = params(6);
        p.stage1_steps = 40;
        p.stage2_tol = 1e-6;
        let mut a = init_ensemble(&p, &spec, RngStream::new(9, 0)).unwrap();
        let mut b = a.clone();
        let ea = prepare_ground_state(&mut a, &spec, &p, None).unwrap();
        let eb = prepare_ground_state(&mut b, &spec, &p, None).unwrap();
        assert_eq!(ea, eb);
        assert_eq!(a, b);
    }
}
