//! Run configuration: TOML file with defaults, strict unknown-key
//! rejection, and CLI-flag overrides layered on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FieldSpec, Grid1D, SystemSpec};
use crate::tdqmc::TdqmcParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactConfig {
    pub n_points: usize,
    pub span: f64,
    /// Imaginary-time step for relaxation.
    pub dtau: f64,
    /// Real-time step.
    pub dt: f64,
    pub energy_tol: f64,
    pub max_relax_steps: usize,
    pub snapshot_stride: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            n_points: 256,
            span: 20.0,
            dtau: 0.01,
            dt: 0.002,
            energy_tol: 1e-10,
            max_relax_steps: 40_000,
            snapshot_stride: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdqmcConfig {
    pub n_walkers: usize,
    pub n_points: usize,
    pub span: f64,
    pub sigma: f64,
    pub init_width: f64,
    pub dtau: f64,
    pub dt: f64,
    pub diffusion: f64,
    pub include_drift: bool,
    pub stage1_steps: usize,
    pub stage2_tol: f64,
    pub stage2_max_steps: usize,
}

impl Default for TdqmcConfig {
    fn default() -> Self {
        let p = TdqmcParams::default();
        TdqmcConfig {
            n_walkers: p.n_walkers,
            n_points: p.grid.n_points(),
            span: p.grid.span(),
            sigma: 0.82,
            init_width: p.init_width,
            dtau: p.dtau,
            dt: p.dt,
            diffusion: p.diffusion,
            include_drift: p.include_drift,
            stage1_steps: p.stage1_steps,
            stage2_tol: p.stage2_tol,
            stage2_max_steps: p.stage2_max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveTarget {
    None,
    First,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub amplitude: f64,
    pub omega: f64,
    pub drive: DriveTarget,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig { amplitude: 15.0, omega: 5.0, drive: DriveTarget::First }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Exact,
    Tdqmc,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub solver: SolverChoice,
    /// Real-time propagation length in a.u.
    pub duration: f64,
    pub sweep_sigmas: Vec<f64>,
    pub sweep_degree: usize,
    pub trajectories: usize,
    pub output_dir: PathBuf,
    pub force: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 42,
            solver: SolverChoice::Both,
            duration: 6.0,
            sweep_sigmas: (0..11).map(|i| 0.4 + 0.1 * i as f64).collect(),
            sweep_degree: 4,
            trajectories: 40,
            output_dir: PathBuf::from("out"),
            force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub exact: ExactConfig,
    pub tdqmc: TdqmcConfig,
    pub field: FieldConfig,
    pub run: RunSection,
}

/// Environment variable that overrides `run.output_dir` (the only
/// environment override supported).
pub const OUTPUT_DIR_ENV: &str = "QNL_OUTPUT_DIR";

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if !(self.tdqmc.sigma > 0.0) {
            return Err(Error::invalid("tdqmc.sigma must be > 0"));
        }
        if self.run.sweep_sigmas.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid("run.sweep_sigmas entries must be > 0"));
        }
        if !(self.run.duration >= 0.0) {
            return Err(Error::invalid("run.duration must be >= 0"));
        }
        if self.run.trajectories == 0 {
            return Err(Error::invalid("run.trajectories must be >= 1"));
        }
        if self.field.amplitude < 0.0 || self.field.omega < 0.0 {
            return Err(Error::invalid("field.amplitude and field.omega must be >= 0"));
        }
        // Grid constructors re-check their own invariants.
        self.exact_grid()?;
        self.tdqmc_params()?.validate(&self.system)?;
        self.field_spec().validate()?;
        Ok(())
    }

    /// CLI overrides and the output-dir environment variable, applied in
    /// increasing precedence: file < env < flags.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<PathBuf>, force: bool) {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                self.run.output_dir = PathBuf::from(dir);
            }
        }
        if let Some(s) = seed {
            self.run.seed = s;
        }
        if let Some(o) = out {
            self.run.output_dir = o;
        }
        if force {
            self.run.force = true;
        }
    }

    pub fn exact_grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.exact.n_points, self.exact.span)
    }

    pub fn tdqmc_params(&self) -> Result<TdqmcParams> {
        Ok(TdqmcParams {
            n_walkers: self.tdqmc.n_walkers,
            grid: Grid1D::new(self.tdqmc.n_points, self.tdqmc.span)?,
            sigma: vec![self.tdqmc.sigma; self.system.n_electrons],
            init_width: self.tdqmc.init_width,
            dtau: self.tdqmc.dtau,
            dt: self.tdqmc.dt,
            diffusion: self.tdqmc.diffusion,
            include_drift: self.tdqmc.include_drift,
            stage1_steps: self.tdqmc.stage1_steps,
            stage2_tol: self.tdqmc.stage2_tol,
            stage2_max_steps: self.tdqmc.stage2_max_steps,
        })
    }

    pub fn field_spec(&self) -> FieldSpec {
        let n = self.system.n_electrons;
        match self.field.drive {
            DriveTarget::None => FieldSpec::none(n),
            DriveTarget::First => FieldSpec::drive_first(self.field.amplitude, self.field.omega, n),
            DriveTarget::All => FieldSpec::drive_all(self.field.amplitude, self.field.omega, n),
        }
    }
}
