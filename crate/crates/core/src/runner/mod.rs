//! Run orchestration: configuration files, checkpoints, CSV artifacts,
//! and the named end-to-end scenarios.

mod checkpoint;
mod config;
pub mod csvout;
mod scenario;

pub use checkpoint::{
    load_ensemble_checkpoint, load_wave_checkpoint, save_ensemble_checkpoint, save_wave_checkpoint,
};
pub use config::{
    DriveTarget, ExactConfig, FieldConfig, RunConfig, RunSection, SolverChoice, TdqmcConfig,
    OUTPUT_DIR_ENV,
};
pub use scenario::{run_scenario, ScenarioReport, SCENARIOS};
