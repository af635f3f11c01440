//! Named end-to-end experiments. Each scenario runs its full pipeline
//! (including companion field-free runs and their subtraction), writes
//! CSV artifacts, and returns the headline numbers.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analysis::{ehrenfest_oracle, idler_ratio, polyfit_min, sigma_sweep};
use crate::entanglement::{entropy_exact, entropy_tdqmc, EntropySeries};
use crate::error::{Error, Result};
use crate::model::{FieldSpec, Grid2D, RngStream, StreamPurpose, SystemSpec};
use crate::runner::config::RunConfig;
use crate::runner::csvout;
use crate::spectral2d::{
    evolve_trajectories, propagate_real, relax_ground_state, sample_density,
    subtract_reference_dipoles, subtract_reference_trajectories, DipoleSeries, PropagationMode,
    PropagationSchedule, TrajectorySet, WaveFunction2D,
};
use crate::tdqmc::{
    init_ensemble, prepare_ground_state, real_time_step, sorted_mean_stderr, GuideWavePropagator,
    PrepareStage, TdqmcEnsemble, TdqmcParams,
};

pub const SCENARIOS: &[&str] = &["fig1a", "fig1bc", "fig2", "fig3"];

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: String,
    pub files: Vec<PathBuf>,
    pub headline: Vec<(String, String)>,
    pub seed: u64,
    pub runtime_secs: f64,
}

impl ScenarioReport {
    pub fn value(&self, key: &str) -> Option<&str> {
        self.headline.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.value(key)?.parse().ok()
    }
}

pub fn run_scenario(name: &str, cfg: &RunConfig) -> Result<ScenarioReport> {
    cfg.validate()?;
    let t0 = Instant::now();
    let mut out = Builder::new(name, cfg);
    match name {
        "fig1a" => fig1a(cfg, &mut out)?,
        "fig1bc" => fig1bc(cfg, &mut out)?,
        "fig2" => fig2(cfg, &mut out)?,
        "fig3" => fig3(cfg, &mut out)?,
        other => {
            return Err(Error::invalid(format!(
                "unknown scenario '{other}'; available: {}",
                SCENARIOS.join(", ")
            )))
        }
    }
    let mut report = out.report;
    report.runtime_secs = t0.elapsed().as_secs_f64();
    for f in &report.files {
        if !f.exists() {
            return Err(Error::numerical(format!("manifest file {} was not produced", f.display())));
        }
    }
    Ok(report)
}

struct Builder {
    report: ScenarioReport,
    dir: PathBuf,
    force: bool,
}

impl Builder {
    fn new(name: &str, cfg: &RunConfig) -> Self {
        Builder {
            report: ScenarioReport {
                scenario: name.to_string(),
                files: Vec::new(),
                headline: Vec::new(),
                seed: cfg.run.seed,
                runtime_secs: 0.0,
            },
            dir: cfg.run.output_dir.clone(),
            force: cfg.run.force,
        }
    }

    fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn add_file(&mut self, p: PathBuf) {
        self.report.files.push(p);
    }

    fn num(&mut self, key: &str, v: f64) {
        self.report.headline.push((key.to_string(), format!("{v:.9e}")));
    }

    fn text(&mut self, key: &str, v: impl Into<String>) {
        self.report.headline.push((key.to_string(), v.into()));
    }

    fn summary(&mut self, file: &str) -> Result<()> {
        let p = self.path(file);
        csvout::write_summary(&p, &self.report.headline, self.force)?;
        self.add_file(p);
        Ok(())
    }
}

fn exact_ground(cfg: &RunConfig, spec: &SystemSpec) -> Result<(WaveFunction2D, f64)> {
    let grid = Grid2D::square(cfg.exact_grid()?);
    let start = WaveFunction2D::gaussian(grid, 1.0)?;
    let (mut wf, energy) =
        relax_ground_state(start, spec, cfg.exact.dtau, cfg.exact.energy_tol, cfg.exact.max_relax_steps)?;
    wf.time = 0.0;
    Ok((wf, energy))
}

fn real_schedule(cfg: &RunConfig) -> Result<PropagationSchedule> {
    let stride = cfg.exact.snapshot_stride;
    let n_steps = (cfg.run.duration / cfg.exact.dt).round() as usize;
    // Land snapshots on exact stride multiples.
    let n_steps = n_steps.div_ceil(stride) * stride;
    PropagationSchedule::new(cfg.exact.dt, n_steps, stride, PropagationMode::Real)
}

/// Driven and companion field-free runs from the same initial state,
/// collapse-subtracted dipoles and trajectories, plus the raw idler
/// record of the driven run (mean position and trajectory spread).
struct SubtractedRun {
    dipoles: DipoleSeries,
    trajectories: TrajectorySet,
    raw_idler_dipole_max: f64,
    raw_idler_traj_dev: f64,
}

fn driven_minus_reference(
    cfg: &RunConfig,
    spec: &SystemSpec,
    initial: &WaveFunction2D,
    fields: &FieldSpec,
) -> Result<SubtractedRun> {
    let schedule = real_schedule(cfg)?;
    let quiet_fields = FieldSpec::none(spec.n_electrons);
    let (snaps_driven, dip_driven) = propagate_real(initial, spec, fields, &schedule)?;
    let (snaps_quiet, dip_quiet) = propagate_real(initial, spec, &quiet_fields, &schedule)?;

    let starts = sample_density(
        initial,
        cfg.run.trajectories,
        RngStream::for_walker(cfg.run.seed, StreamPurpose::TrajectorySeeds, 0, 0),
    )?;
    let traj_driven = evolve_trajectories(&snaps_driven, starts.clone(), 5)?;
    let traj_quiet = evolve_trajectories(&snaps_quiet, starts, 5)?;

    Ok(SubtractedRun {
        dipoles: subtract_reference_dipoles(&dip_driven, &dip_quiet)?,
        trajectories: subtract_reference_trajectories(&traj_driven, &traj_quiet)?,
        raw_idler_dipole_max: dip_driven.max_abs_d2(),
        raw_idler_traj_dev: traj_driven.max_idler_deviation(),
    })
}

/// Max |d1(t) - x_oracle(t)| against the analytic driven-oscillator mean.
fn oracle_deviation(cfg: &RunConfig, dipoles: &DipoleSeries) -> Result<f64> {
    let channel = cfg.field_spec().channels[0];
    let t_end = *dipoles.times.last().unwrap_or(&0.0);
    let dt_out = if dipoles.times.len() > 1 { dipoles.times[1] - dipoles.times[0] } else { 1.0 };
    let oracle = ehrenfest_oracle(&channel, cfg.system.confinement_strength, t_end, dt_out)?;
    let worst = dipoles
        .times
        .iter()
        .zip(&dipoles.d1)
        .map(|(&t, &d)| {
            let idx = (t / dt_out).round() as usize;
            (d - oracle[idx.min(oracle.len() - 1)].1).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

fn fig1a(cfg: &RunConfig, out: &mut Builder) -> Result<()> {
    let table = sigma_sweep(&cfg.run.sweep_sigmas, &cfg.tdqmc_params()?, &cfg.system, cfg.run.seed)?;
    let fit = polyfit_min(&table, cfg.run.sweep_degree)?;
    let p = out.path("fig1a_sweep.csv");
    csvout::write_sweep(&p, &table, out.force)?;
    out.add_file(p);
    out.num("sigma_star", fit.sigma_star);
    out.num("e_star", fit.e_star);
    out.num("fit_residual", fit.residual_norm);
    out.num("fit_condition", fit.condition);
    out.text("fit_flat", fit.flat.to_string());
    out.summary("fig1a_summary.txt")
}

fn fig1bc(cfg: &RunConfig, out: &mut Builder) -> Result<()> {
    let (ground, energy) = exact_ground(cfg, &cfg.system)?;
    out.num("ground_energy", energy);
    out.num("ground_entropy", entropy_exact(&ground));

    let schedule = real_schedule(cfg)?;
    let fields = cfg.field_spec();
    let (snaps, dipoles) = propagate_real(&ground, &cfg.system, &fields, &schedule)?;
    let p = out.path("fig1bc_dipoles.csv");
    csvout::write_dipoles(&p, &dipoles, out.force)?;
    out.add_file(p);

    // Probability density marginals of the ground state and the driven
    // snapshot (the paper's panels b/c).
    let last = snaps.last().expect("at least the initial snapshot");
    let p = out.path("fig1bc_density.csv");
    write_marginals(&p, &ground, last, out.force)?;
    out.add_file(p);
    out.num("driven_dipole_max", dipoles.max_abs_d1());
    out.num("snapshot_time", last.time);
    out.summary("fig1bc_summary.txt")
}

fn write_marginals(path: &Path, a: &WaveFunction2D, b: &WaveFunction2D, force: bool) -> Result<()> {
    let grid = a.grid();
    let (n1, n2) = (grid.axis1.n_points(), grid.axis2.n_points());
    let dx2 = grid.axis2.dx();
    let marginal = |wf: &WaveFunction2D, i1: usize| -> f64 {
        (0..n2).map(|i2| wf.amplitudes()[grid.index(i1, i2)].norm_sqr()).sum::<f64>() * dx2
    };
    let times: Vec<f64> = grid.axis1.points();
    let cols = vec![
        ("rho_ground".to_string(), (0..n1).map(|i| marginal(a, i)).collect::<Vec<_>>()),
        ("rho_driven".to_string(), (0..n1).map(|i| marginal(b, i)).collect::<Vec<_>>()),
    ];
    // Reuse the entropy writer layout: first column is the grid point.
    csvout::write_entropy(path, &times, &cols, force)
}

/// TDQMC driven evolution record: dipole of each electron per snapshot
/// with walker-spread standard errors, plus the entropy series.
struct TdqmcDrivenRecord {
    times: Vec<f64>,
    d1: Vec<f64>,
    d1_stderr: Vec<f64>,
    d2: Vec<f64>,
    entropy: Vec<f64>,
}

fn tdqmc_driven(
    ensemble: &mut TdqmcEnsemble,
    spec: &SystemSpec,
    fields: &FieldSpec,
    cfg: &RunConfig,
    with_entropy: bool,
) -> Result<TdqmcDrivenRecord> {
    let params = cfg.tdqmc_params()?;
    let stride = cfg.exact.snapshot_stride;
    let n_steps = ((cfg.run.duration / params.dt).round() as usize).div_ceil(stride) * stride;
    let prop = GuideWavePropagator::new(ensemble.grid(), spec, params.dt, PropagationMode::Real);

    let mut rec = TdqmcDrivenRecord {
        times: Vec::new(),
        d1: Vec::new(),
        d1_stderr: Vec::new(),
        d2: Vec::new(),
        entropy: Vec::new(),
    };
    let record = |ens: &TdqmcEnsemble, rec: &mut TdqmcDrivenRecord| {
        let (m1, s1) = sorted_mean_stderr(&ens.electron(0).walkers);
        let (m2, _) = sorted_mean_stderr(&ens.electron(1).walkers);
        rec.times.push(ens.time);
        rec.d1.push(m1);
        rec.d1_stderr.push(s1);
        rec.d2.push(m2);
        rec.entropy.push(if with_entropy { entropy_tdqmc(ens) } else { 0.0 });
    };
    record(ensemble, &mut rec);
    for step in 1..=n_steps {
        real_time_step(ensemble, spec, &prop, Some(fields))?;
        if step % stride == 0 {
            record(ensemble, &mut rec);
        }
    }
    Ok(rec)
}

fn fig2(cfg: &RunConfig, out: &mut Builder) -> Result<()> {
    // Interacting ground state, then the pair potential is switched off
    // for the driven real-time stage. The correlated initial state is not
    // stationary under the decoupled Hamiltonian, so individual idler
    // trajectories move even though the idler mean stays at zero.
    let (ground, energy) = exact_ground(cfg, &cfg.system)?;
    out.num("ground_energy", energy);
    let s_exact_ground = entropy_exact(&ground);
    out.num("entropy_exact_ground", s_exact_ground);
    let spec_off = cfg.system.without_interaction();
    let fields = cfg.field_spec();

    let run = driven_minus_reference(cfg, &spec_off, &ground, &fields)?;
    let p = out.path("fig2_dipoles_exact.csv");
    csvout::write_dipoles(&p, &run.dipoles, out.force)?;
    out.add_file(p);
    let p = out.path("fig2_trajectories.csv");
    csvout::write_trajectories(&p, &run.trajectories, out.force)?;
    out.add_file(p);

    out.num("idler_dipole_max", run.dipoles.max_abs_d2());
    out.num("idler_traj_max_dev", run.trajectories.max_idler_deviation());
    out.num("idler_dipole_raw_max", run.raw_idler_dipole_max);
    out.num("idler_traj_raw_dev", run.raw_idler_traj_dev);
    out.num("oracle_err_exact", oracle_deviation(cfg, &run.dipoles)?);

    // Exact entropy along the driven decoupled run: the evolution is a
    // product of one-body unitaries, so the series must stay flat.
    let schedule = real_schedule(cfg)?;
    let (snaps_driven, _) = propagate_real(&ground, &spec_off, &fields, &schedule)?;
    let mut s_exact = EntropySeries::new("S_exact");
    for snap in &snaps_driven {
        s_exact.push(snap.time, entropy_exact(snap));
    }
    drop(snaps_driven);

    // TDQMC side: prepare with the interaction on, then drive with it
    // off. The idler electron must be bit-identical between the driven
    // and undriven runs.
    let params = cfg.tdqmc_params()?;
    let mut ens = init_ensemble(&params, &cfg.system, RngStream::new(cfg.run.seed, 0))?;
    prepare_ground_state(&mut ens, &cfg.system, &params, None)?;
    let s_plateau = entropy_tdqmc(&ens);
    out.num("entropy_tdqmc_plateau", s_plateau);
    out.num("entropy_plateau_rel_err", (s_plateau - s_exact_ground).abs() / s_exact_ground);
    ens.time = 0.0;
    let mut driven_ens = ens.clone();
    let mut quiet_ens = ens;
    let driven = tdqmc_driven(&mut driven_ens, &spec_off, &fields, cfg, true)?;
    let quiet = tdqmc_driven(&mut quiet_ens, &spec_off, &FieldSpec::none(2), cfg, false)?;

    let n = driven.times.len().min(s_exact.times.len());
    let rel_err_max = (0..n)
        .map(|i| (driven.entropy[i] - s_exact.entropy[i]).abs() / s_exact.entropy[i])
        .fold(0.0, f64::max);
    out.num("entropy_driven_rel_err_max", rel_err_max);
    let p = out.path("fig2_entropy.csv");
    let cols = vec![
        ("S_exact".to_string(), s_exact.entropy[..n].to_vec()),
        (format!("S_tdqmc_{:.2}", cfg.tdqmc.sigma), driven.entropy[..n].to_vec()),
    ];
    csvout::write_entropy(&p, &s_exact.times[..n], &cols, out.force)?;
    out.add_file(p);

    let identical = driven_ens.electron(1) == quiet_ens.electron(1);
    out.text("tdqmc_idler_identical", identical.to_string());
    let idler_sub_max = driven
        .d2
        .iter()
        .zip(&quiet.d2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.num("tdqmc_idler_dipole_max", idler_sub_max);

    let mut tdqmc_dip = DipoleSeries::default();
    for i in 0..driven.times.len() {
        tdqmc_dip.push(driven.times[i], driven.d1[i] - quiet.d1[i], driven.d2[i] - quiet.d2[i]);
    }
    let p = out.path("fig2_dipoles_tdqmc.csv");
    csvout::write_dipoles(&p, &tdqmc_dip, out.force)?;
    out.add_file(p);
    out.num("oracle_err_tdqmc", oracle_deviation(cfg, &tdqmc_dip)?);
    out.num("tdqmc_stderr_max", driven.d1_stderr.iter().fold(0.0_f64, |m, &v| m.max(v)));
    out.summary("fig2_summary.txt")
}

fn fig3(cfg: &RunConfig, out: &mut Builder) -> Result<()> {
    let (ground, energy) = exact_ground(cfg, &cfg.system)?;
    out.num("ground_energy", energy);
    let s_exact_ground = entropy_exact(&ground);
    out.num("entropy_exact_ground", s_exact_ground);
    let fields = cfg.field_spec();

    // Interacting driven run (the spatial-nonlocality channel is live).
    let schedule = real_schedule(cfg)?;
    let (snaps_driven, dip_driven) = propagate_real(&ground, &cfg.system, &fields, &schedule)?;
    let (_, dip_quiet) = propagate_real(&ground, &cfg.system, &FieldSpec::none(2), &schedule)?;
    let dip_sub = subtract_reference_dipoles(&dip_driven, &dip_quiet)?;
    let p = out.path("fig3_dipoles_exact.csv");
    csvout::write_dipoles(&p, &dip_sub, out.force)?;
    out.add_file(p);
    out.num("idler_dipole_max", dip_sub.max_abs_d2());

    // Non-interacting reference trajectories for the amplitude ratio
    // (same pipeline as fig2).
    let nonint = driven_minus_reference(cfg, &cfg.system.without_interaction(), &ground, &fields)?;
    let ratio = idler_ratio(&dip_sub, &nonint.trajectories);
    out.num("idler_ratio", ratio.ratio);
    out.text("idler_ratio_infinite", ratio.infinite.to_string());

    // Exact entropy along the driven evolution.
    let mut s_exact = EntropySeries::new("S_exact");
    for snap in &snaps_driven {
        s_exact.push(snap.time, entropy_exact(snap));
    }

    // TDQMC entropy: plateaus at the swept nonlocality lengths, full
    // buildup and driven series at the central one.
    let base = cfg.tdqmc_params()?;
    let mut plateaus = Vec::new();
    let mut central: Option<(TdqmcEnsemble, EntropySeries)> = None;
    for &sigma in &[0.70, cfg.tdqmc.sigma, 1.0] {
        let params = TdqmcParams { sigma: vec![sigma; cfg.system.n_electrons], ..base.clone() };
        let mut ens = init_ensemble(&params, &cfg.system, RngStream::new(cfg.run.seed, 0))?;
        let mut buildup = EntropySeries::new(format!("S_tdqmc_{sigma:.2}"));
        let stride = cfg.exact.snapshot_stride;
        let mut count = 0usize;
        let mut obs = |e: &TdqmcEnsemble, _stage: PrepareStage| {
            count += 1;
            if count % stride == 0 {
                buildup.push(e.time, entropy_tdqmc(e));
            }
        };
        prepare_ground_state(&mut ens, &cfg.system, &params, Some(&mut obs))?;
        let s_ground = entropy_tdqmc(&ens);
        buildup.push(ens.time, s_ground);
        plateaus.push((sigma, s_ground));
        if sigma == cfg.tdqmc.sigma {
            central = Some((ens, buildup));
        }
    }
    let (mut ens, buildup) = central.expect("central sigma runs");

    for &(sigma, s) in &plateaus {
        out.num(&format!("entropy_tdqmc_plateau_{sigma:.2}"), s);
    }
    let s82 = plateaus.iter().find(|(s, _)| *s == cfg.tdqmc.sigma).unwrap().1;
    out.num("entropy_plateau_rel_err", (s82 - s_exact_ground).abs() / s_exact_ground);
    let sens = |s: f64| (s - s82).abs() / s82;
    out.num("entropy_sensitivity_low", sens(plateaus[0].1));
    out.num("entropy_sensitivity_high", sens(plateaus[2].1));

    // Driven entropy, aligned with the exact snapshot times.
    ens.time = 0.0;
    let driven = tdqmc_driven(&mut ens, &cfg.system, &fields, cfg, true)?;
    let n = driven.times.len().min(s_exact.times.len());
    let rel_err_max = (0..n)
        .map(|i| (driven.entropy[i] - s_exact.entropy[i]).abs() / s_exact.entropy[i])
        .fold(0.0, f64::max);
    out.num("entropy_driven_rel_err_max", rel_err_max);

    let p = out.path("fig3_entropy.csv");
    let cols = vec![
        ("S_exact".to_string(), s_exact.entropy[..n].to_vec()),
        (format!("S_tdqmc_{:.2}", cfg.tdqmc.sigma), driven.entropy[..n].to_vec()),
    ];
    csvout::write_entropy(&p, &s_exact.times[..n], &cols, out.force)?;
    out.add_file(p);

    // Buildup at negative times, per the paper's plotting convention.
    let p = out.path("fig3_entropy_buildup.csv");
    let tau_end = *buildup.times.last().unwrap_or(&0.0);
    let shifted: Vec<f64> = buildup.times.iter().map(|t| t - tau_end).collect();
    csvout::write_entropy(&p, &shifted, &[(buildup.label.clone(), buildup.entropy.clone())], out.force)?;
    out.add_file(p);

    let p = out.path("fig3_dipoles_tdqmc.csv");
    let mut tdqmc_dip = DipoleSeries::default();
    for i in 0..driven.times.len() {
        tdqmc_dip.push(driven.times[i], driven.d1[i], driven.d2[i]);
    }
    csvout::write_dipoles(&p, &tdqmc_dip, out.force)?;
    out.add_file(p);
    out.num("tdqmc_idler_dipole_max", tdqmc_dip.max_abs_d2());
    out.summary("fig3_summary.txt")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_scenario_lists_the_options() {
        let cfg = RunConfig::default();
        let err = run_scenario("fig9", &cfg).unwrap_err().to_string();
        for s in SCENARIOS {
            assert!(err.contains(s), "missing {s} in: {err}");
        }
    }

    // Scenario pipelines at reduced size (full-size runs live in the
    // acceptance suite).
    fn tiny_config(dir: &Path) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.exact.n_points = 64;
        cfg.exact.energy_tol = 1e-8;
        cfg.exact.dt = 0.004;
        cfg.tdqmc.n_walkers = 24;
        cfg.tdqmc.n_points = 64;
        cfg.tdqmc.stage1_steps = 60;
        cfg.tdqmc.stage2_tol = 1e-6;
        cfg.run.duration = 0.5;
        cfg.run.trajectories = 6;
        cfg.run.sweep_sigmas = vec![0.6, 0.8, 1.0];
        cfg.run.sweep_degree = 2;
        cfg.run.output_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn fig1a_produces_fit_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let report = run_scenario("fig1a", &cfg).unwrap();
        assert!(report.number("sigma_star").is_some());
        assert!(report.number("e_star").is_some());
        assert!(report.files.iter().all(|f| f.exists()));
    }

    #[test]
    fn fig2_reports_decoupling() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let report = run_scenario("fig2", &cfg).unwrap();
        assert_eq!(report.value("tdqmc_idler_identical"), Some("true"));
        assert_eq!(report.number("tdqmc_idler_dipole_max"), Some(0.0));
        let idler = report.number("idler_dipole_max").unwrap();
        assert!(idler < 1e-2, "idler dipole {idler}");
    }

    #[test]
    fn rerun_without_force_fails_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(dir.path());
        run_scenario("fig1a", &cfg).unwrap();
        assert!(run_scenario("fig1a", &cfg).is_err());
        cfg.run.force = true;
        run_scenario("fig1a", &cfg).unwrap();
    }
}
