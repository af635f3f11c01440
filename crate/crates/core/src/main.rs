use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qnl::entanglement::{entropy_exact, entropy_tdqmc, EntropySeries};
use qnl::model::{Grid2D, RngStream};
use qnl::runner::{csvout, run_scenario, RunConfig, SCENARIOS};
use qnl::spectral2d::{
    propagate_real, relax_ground_state, PropagationMode, PropagationSchedule, WaveFunction2D,
};
use qnl::tdqmc::{init_ensemble, prepare_ground_state, TdqmcEnsemble};
use qnl::Result;

#[derive(Parser)]
#[command(name = "qnl", about = "Two-electron exact solver and guide-wave Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; omitted fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply_overrides(self.seed, self.out.clone(), self.force);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Relax the exact two-electron ground state and report its energy.
    GroundExact(Common),
    /// Prepare the guide-wave ensemble and report both energy estimators.
    GroundTdqmc {
        #[command(flatten)]
        common: Common,
        /// Skip the drift term during walker relaxation.
        #[arg(long)]
        variational_no_drift: bool,
    },
    /// Sweep the nonlocality length and fit the variational minimum.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        variational_no_drift: bool,
    },
    /// Drive the exact ground state in real time and record dipoles.
    Evolve(Common),
    /// Entropy buildup of the guide-wave ensemble against the exact value.
    Entropy(Common),
    /// Run a named end-to-end experiment (fig1a, fig1bc, fig2, fig3).
    Scenario {
        #[command(flatten)]
        common: Common,
        name: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GroundExact(common) => ground_exact(&common.config()?),
        Command::GroundTdqmc { common, variational_no_drift } => {
            let mut cfg = common.config()?;
            cfg.tdqmc.include_drift = !variational_no_drift;
            ground_tdqmc(&cfg)
        }
        Command::Sweep { common, variational_no_drift } => {
            let mut cfg = common.config()?;
            cfg.tdqmc.include_drift = !variational_no_drift;
            let report = run_scenario("fig1a", &cfg)?;
            print_report(&report);
            Ok(())
        }
        Command::Evolve(common) => evolve(&common.config()?),
        Command::Entropy(common) => entropy(&common.config()?),
        Command::Scenario { common, name } => {
            if !SCENARIOS.contains(&name.as_str()) {
                return Err(qnl::Error::invalid(format!(
                    "unknown scenario '{name}'; available: {}",
                    SCENARIOS.join(", ")
                )));
            }
            let report = run_scenario(&name, &common.config()?)?;
            print_report(&report);
            Ok(())
        }
    }
}

fn print_report(report: &qnl::runner::ScenarioReport) {
    println!("scenario {} (seed {}, {:.1}s)", report.scenario, report.seed, report.runtime_secs);
    for (k, v) in &report.headline {
        println!("  {k} = {v}");
    }
    for f in &report.files {
        println!("  wrote {}", f.display());
    }
}

fn relax_exact(cfg: &RunConfig) -> Result<(WaveFunction2D, f64)> {
    let grid = Grid2D::square(cfg.exact_grid()?);
    let start = WaveFunction2D::gaussian(grid, 1.0)?;
    let (mut wf, energy) =
        relax_ground_state(start, &cfg.system, cfg.exact.dtau, cfg.exact.energy_tol, cfg.exact.max_relax_steps)?;
    wf.time = 0.0;
    Ok((wf, energy))
}

fn prepare_tdqmc(cfg: &RunConfig) -> Result<(TdqmcEnsemble, qnl::tdqmc::EnergyEstimate)> {
    let params = cfg.tdqmc_params()?;
    let mut ens = init_ensemble(&params, &cfg.system, RngStream::new(cfg.run.seed, 0))?;
    let estimate = prepare_ground_state(&mut ens, &cfg.system, &params, None)?;
    Ok((ens, estimate))
}

fn ground_exact(cfg: &RunConfig) -> Result<()> {
    let (wf, energy) = relax_exact(cfg)?;
    println!("E = {energy:.6}");
    let pairs = vec![
        ("energy".to_string(), format!("{energy:.9e}")),
        ("entropy".to_string(), format!("{:.9e}", entropy_exact(&wf))),
        ("n_points".to_string(), cfg.exact.n_points.to_string()),
        ("span".to_string(), format!("{}", cfg.exact.span)),
    ];
    csvout::write_summary(&cfg.run.output_dir.join("ground_exact.txt"), &pairs, cfg.run.force)
}

fn ground_tdqmc(cfg: &RunConfig) -> Result<()> {
    let (ens, est) = prepare_tdqmc(cfg)?;
    println!("E1 = {:.6} +- {:.1e}", est.e1, est.e1_stderr);
    println!("E2 = {:.6} +- {:.1e}", est.e2, est.e2_stderr);
    let pairs = vec![
        ("e1".to_string(), format!("{:.9e}", est.e1)),
        ("e1_stderr".to_string(), format!("{:.9e}", est.e1_stderr)),
        ("e2".to_string(), format!("{:.9e}", est.e2)),
        ("e2_stderr".to_string(), format!("{:.9e}", est.e2_stderr)),
        ("sigma".to_string(), format!("{}", cfg.tdqmc.sigma)),
        ("n_walkers".to_string(), ens.n_walkers().to_string()),
    ];
    csvout::write_summary(&cfg.run.output_dir.join("ground_tdqmc.txt"), &pairs, cfg.run.force)
}

fn evolve(cfg: &RunConfig) -> Result<()> {
    let (ground, energy) = relax_exact(cfg)?;
    let stride = cfg.exact.snapshot_stride;
    let n_steps = ((cfg.run.duration / cfg.exact.dt).round() as usize).div_ceil(stride) * stride;
    let schedule = PropagationSchedule::new(cfg.exact.dt, n_steps, stride, PropagationMode::Real)?;
    let (_, dipoles) = propagate_real(&ground, &cfg.system, &cfg.field_spec(), &schedule)?;
    println!("E0 = {energy:.6}, max |<x1>| = {:.4}", dipoles.max_abs_d1());
    csvout::write_dipoles(&cfg.run.output_dir.join("evolve_dipoles.csv"), &dipoles, cfg.run.force)
}

fn entropy(cfg: &RunConfig) -> Result<()> {
    let (wf, _) = relax_exact(cfg)?;
    let s_exact = entropy_exact(&wf);

    let params = cfg.tdqmc_params()?;
    let mut ens = init_ensemble(&params, &cfg.system, RngStream::new(cfg.run.seed, 0))?;
    let mut series = EntropySeries::new(format!("S_tdqmc_{:.2}", cfg.tdqmc.sigma));
    let mut count = 0usize;
    let stride = cfg.exact.snapshot_stride;
    let mut obs = |e: &TdqmcEnsemble, _stage: qnl::tdqmc::PrepareStage| {
        count += 1;
        if count % stride == 0 {
            series.push(e.time, entropy_tdqmc(e));
        }
    };
    prepare_ground_state(&mut ens, &cfg.system, &params, Some(&mut obs))?;
    let plateau = entropy_tdqmc(&ens);
    series.push(ens.time, plateau);
    println!("S_exact = {s_exact:.6}, S_tdqmc = {plateau:.6}");

    csvout::write_entropy(
        &cfg.run.output_dir.join("entropy_buildup.csv"),
        &series.times,
        &[(series.label.clone(), series.entropy.clone())],
        cfg.run.force,
    )?;
    let pairs = vec![
        ("entropy_exact".to_string(), format!("{s_exact:.9e}")),
        ("entropy_tdqmc".to_string(), format!("{plateau:.9e}")),
        ("sigma".to_string(), format!("{}", cfg.tdqmc.sigma)),
    ];
    csvout::write_summary(&cfg.run.output_dir.join("entropy_summary.txt"), &pairs, cfg.run.force)
}
