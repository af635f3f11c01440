//! Side-by-side solvers for a pair of trapped 1D electrons: a numerically
//! exact two-body split-step Fourier solver and a guide-wave quantum Monte
//! Carlo engine with a tunable spatial-nonlocality length, plus the
//! entanglement, sweep, and experiment-orchestration layers on top.

pub mod analysis;
pub mod entanglement;
pub mod error;
pub mod model;
pub mod runner;
pub mod spectral2d;
pub mod tdqmc;

mod fourier;

pub use error::{Error, Result};
