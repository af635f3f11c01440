//! Numerically exact two-body solver: split-step Fourier propagation in
//! real and imaginary time, Bohmian trajectories, dipole monitoring, and
//! collapse-reference subtraction.

mod bohm;
mod propagate;
mod sample;
mod series;
mod wave;

pub use bohm::{bohm_velocity, evolve_trajectories, TrajectoryIntegrator, VelocityField, NODE_GUARD};
pub use propagate::{
    energy_expectation, propagate_observed, propagate_real, relax_ground_state, static_potential,
    PropagationMode, PropagationSchedule, Propagator2D,
};
pub use sample::sample_density;
pub use series::{
    subtract_reference_dipoles, subtract_reference_trajectories, DipoleSeries, TrajectorySet,
};
pub use wave::WaveFunction2D;
