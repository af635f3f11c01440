//! End-to-end acceptance checks. Each test prints one pass/fail line.
//! Heavy pipelines (the named scenarios) run once and are shared.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use qnl::entanglement::reduced_density_exact;
use qnl::model::{
    confinement_potential, soft_core_potential, Grid1D, Grid2D, RngStream, SystemSpec,
};
use qnl::runner::{run_scenario, RunConfig, ScenarioReport};
use qnl::spectral2d::{
    propagate_real, relax_ground_state, PropagationMode, PropagationSchedule, WaveFunction2D,
};
use qnl::analysis::sigma_sweep;
use qnl::tdqmc::{
    compute_effective_potentials, init_ensemble, kernel_weight, prepare_ground_state,
    real_time_step, walker_drift_diffusion_step, GuideWavePropagator, ImaginaryStepParams,
    TdqmcParams,
};
use statrs::distribution::{ContinuousCDF, Normal};

fn criterion(n: usize, desc: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n}: {verdict} - {desc} ({detail})");
    assert!(pass, "criterion {n} failed: {detail}");
}

fn scenario_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qnl-acceptance-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_default_scenario(name: &str) -> ScenarioReport {
    let mut cfg = RunConfig::default();
    cfg.run.output_dir = scenario_dir(name);
    cfg.run.force = true;
    let t0 = Instant::now();
    let report = run_scenario(name, &cfg).unwrap();
    println!("scenario {name} finished in {:.1}s", t0.elapsed().as_secs_f64());
    report
}

fn fig1a() -> &'static ScenarioReport {
    static R: OnceLock<ScenarioReport> = OnceLock::new();
    R.get_or_init(|| run_default_scenario("fig1a"))
}

fn fig2() -> &'static ScenarioReport {
    static R: OnceLock<ScenarioReport> = OnceLock::new();
    R.get_or_init(|| run_default_scenario("fig2"))
}

fn fig3() -> &'static ScenarioReport {
    static R: OnceLock<ScenarioReport> = OnceLock::new();
    R.get_or_init(|| run_default_scenario("fig3"))
}

fn relax_default(spec: &SystemSpec) -> (WaveFunction2D, f64) {
    let cfg = RunConfig::default();
    let grid = Grid2D::square(cfg.exact_grid().unwrap());
    let start = WaveFunction2D::gaussian(grid, 1.0).unwrap();
    let (mut wf, e) =
        relax_ground_state(start, spec, cfg.exact.dtau, cfg.exact.energy_tol, cfg.exact.max_relax_steps)
            .unwrap();
    wf.time = 0.0;
    (wf, e)
}

fn interacting_ground() -> &'static (WaveFunction2D, f64) {
    static R: OnceLock<(WaveFunction2D, f64)> = OnceLock::new();
    R.get_or_init(|| relax_default(&SystemSpec::default()))
}

#[test]
fn criterion_01_exact_interacting_ground_state() {
    let t0 = Instant::now();
    let (_, energy) = interacting_ground();
    criterion(
        1,
        "exact ground state E = 1.7735 +- 2e-3",
        (energy - 1.7735).abs() < 2e-3,
        format!("E = {energy:.6}, {:.0}s", t0.elapsed().as_secs_f64()),
    );
}

#[test]
fn criterion_02_exact_noninteracting_ground_state() {
    let (_, energy) = relax_default(&SystemSpec::default().without_interaction());
    criterion(
        2,
        "non-interacting E = 1.0000 +- 1e-4",
        (energy - 1.0).abs() < 1e-4,
        format!("E = {energy:.7}"),
    );
}

#[test]
fn criterion_03_small_grid_dense_diagonalization() {
    let n = 32;
    let axis = Grid1D::new(n, 20.0).unwrap();
    let spec = SystemSpec::default();
    let points = axis.points();
    let dx = axis.dx();
    let span = 20.0;

    // 1D spectral kinetic matrix: T = F^-1 diag(k^2/2) F, real symmetric.
    let mut t1 = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for m in 0..n {
                let m_signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                let k = 2.0 * PI * m_signed / span;
                acc += 0.5 * k * k * (k * (points[a] - points[b])).cos();
            }
            t1[(a, b)] = acc / n as f64;
        }
    }

    // Two-body H on the product grid, row index a1*n + a2.
    let nn = n * n;
    let mut h = DMatrix::<f64>::zeros(nn, nn);
    for a1 in 0..n {
        for a2 in 0..n {
            let row = a1 * n + a2;
            for b in 0..n {
                h[(row, b * n + a2)] += t1[(a1, b)];
                h[(row, a1 * n + b)] += t1[(a2, b)];
            }
            h[(row, row)] += confinement_potential(points[a1], &spec)
                + confinement_potential(points[a2], &spec)
                + soft_core_potential(points[a1], points[a2], &spec);
        }
    }
    let eigen = SymmetricEigen::new(h);
    let (idx, &e_dense) = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let mut psi: Vec<f64> = eigen.eigenvectors.column(idx).iter().copied().collect();
    let norm = (psi.iter().map(|v| v * v).sum::<f64>() * dx * dx).sqrt();
    for v in &mut psi {
        *v /= norm;
    }

    let start = WaveFunction2D::gaussian(Grid2D::square(axis), 1.0).unwrap();
    let (wf, e_relax) = relax_ground_state(start, &spec, 0.005, 1e-13, 200_000).unwrap();
    let rho = reduced_density_exact(&wf, 0);

    // rho from the dense eigenvector; the sign of psi cancels in psi psi†.
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let dense: f64 = (0..n).map(|l| psi[i * n + l] * psi[j * n + l]).sum::<f64>() * dx;
            worst = worst.max((rho.entry(i, j) - Complex64::new(dense, 0.0)).norm());
        }
    }
    let de = (e_relax - e_dense).abs();
    criterion(
        3,
        "32x32 relaxation matches dense diagonalization",
        de < 1e-4 && worst < 1e-6,
        format!("dE = {de:.2e}, max |drho| = {worst:.2e}"),
    );
}

#[test]
fn criterion_04_variational_minimum() {
    let r = fig1a();
    let sigma_star = r.number("sigma_star").unwrap();
    let e_star = r.number("e_star").unwrap();
    criterion(
        4,
        "sweep minimum sigma* = 0.82 +- 0.08, E* = 1.7736 +- 5e-3",
        (sigma_star - 0.82).abs() < 0.08 && (e_star - 1.7736).abs() < 5e-3,
        format!("sigma* = {sigma_star:.3}, E* = {e_star:.5}"),
    );
}

#[test]
fn criterion_05_estimator_agreement() {
    let spec = SystemSpec::default();
    let params = RunConfig::default().tdqmc_params().unwrap();
    let mut ens = init_ensemble(&params, &spec, RngStream::new(42, 0)).unwrap();
    let est = prepare_ground_state(&mut ens, &spec, &params, None).unwrap();
    let rel = (est.e1 - est.e2).abs() / est.e2;
    criterion(
        5,
        "mixed and wave estimators agree within 2%",
        rel < 0.02,
        format!("E1 = {:.5}, E2 = {:.5}, rel = {:.4}", est.e1, est.e2, rel),
    );
}

#[test]
fn criterion_06_driven_dipole_matches_oracle() {
    let r = fig2();
    let exact_err = r.number("oracle_err_exact").unwrap();
    let tdqmc_err = r.number("oracle_err_tdqmc").unwrap();
    let stderr = r.number("tdqmc_stderr_max").unwrap();
    let tdqmc_bound = 0.05 + 3.0 * stderr;
    criterion(
        6,
        "driven dipole tracks -0.625 sin(5t) + 3.125 sin(t)",
        exact_err < 0.05 && tdqmc_err < tdqmc_bound,
        format!("exact err {exact_err:.4}, tdqmc err {tdqmc_err:.4} (bound {tdqmc_bound:.4})"),
    );
}

#[test]
fn criterion_07_nonlocal_causality_signature() {
    let r = fig2();
    let dipole = r.number("idler_dipole_raw_max").unwrap();
    let traj = r.number("idler_traj_raw_dev").unwrap();
    criterion(
        7,
        "idler trajectories move while the idler dipole stays < 1e-3",
        dipole < 1e-3 && traj > 10.0 * 1e-3,
        format!("dipole {dipole:.2e}, trajectory deviation {traj:.3}"),
    );
}

#[test]
fn criterion_08_spatial_nonlocality_dominance() {
    let r = fig3();
    let ratio = r.number("idler_ratio").unwrap();
    criterion(
        8,
        "interacting idler response >= 30x the non-interacting one",
        ratio >= 30.0 && r.value("idler_ratio_infinite") == Some("false"),
        format!("ratio = {ratio:.1}"),
    );
}

#[test]
fn criterion_09_tdqmc_decoupling() {
    let r = fig2();
    let identical = r.value("tdqmc_idler_identical") == Some("true");
    let idler = r.number("tdqmc_idler_dipole_max").unwrap();
    criterion(
        9,
        "undriven electron is bit-identical with interaction off",
        identical && idler == 0.0,
        format!("bit-identical = {identical}, idler dipole diff = {idler:.1e}"),
    );
}

#[test]
fn criterion_10_entropy_agreement_and_sensitivity() {
    let r = fig2();
    let plateau = r.number("entropy_plateau_rel_err").unwrap();
    let driven = r.number("entropy_driven_rel_err_max").unwrap();
    let r = fig3();
    let low = r.number("entropy_sensitivity_low").unwrap();
    let high = r.number("entropy_sensitivity_high").unwrap();
    criterion(
        10,
        "entropy within 15% of exact; >5% sensitivity to the length scale",
        plateau < 0.15 && driven < 0.15 && low > 0.05 && high > 0.05,
        format!(
            "plateau err {plateau:.3}, driven err {driven:.3}, sensitivity {low:.3}/{high:.3}"
        ),
    );
}

#[test]
fn criterion_11_invariant_suite() {
    let t0 = Instant::now();
    let cfg = RunConfig::default();
    let spec = SystemSpec::default();

    // Norm conservation over 1000 driven real-time steps.
    let (ground, _) = interacting_ground();
    let schedule = PropagationSchedule::new(cfg.exact.dt, 1000, 1000, PropagationMode::Real).unwrap();
    let (snaps, _) = propagate_real(ground, &spec, &cfg.field_spec(), &schedule).unwrap();
    let norm_defect = (snaps.last().unwrap().norm() - 1.0).abs();
    let norm_ok = norm_defect < 1e-10;

    // Guide-wave norms over 1000 driven real-time steps.
    let params = TdqmcParams { n_walkers: 8, ..cfg.tdqmc_params().unwrap() };
    let mut ens = init_ensemble(&params, &spec, RngStream::new(42, 0)).unwrap();
    let prop = GuideWavePropagator::new(ens.grid(), &spec, params.dt, PropagationMode::Real);
    let fields = cfg.field_spec();
    for _ in 0..1000 {
        real_time_step(&mut ens, &spec, &prop, Some(&fields)).unwrap();
    }
    let wave_defect = ens.max_norm_defect();
    let wave_ok = wave_defect < 1e-10;

    // Reduced density matrix: unit trace, Hermitian.
    let rho = reduced_density_exact(ground, 0);
    let trace_defect = (rho.trace() - Complex64::ONE).norm();
    let herm_defect = rho.hermiticity_defect();
    let rho_ok = trace_defect < 1e-8 && herm_defect < 1e-8;

    // Kernel limits at small M.
    let small = TdqmcParams {
        n_walkers: 16,
        sigma: vec![1e-4, 1e-4],
        ..cfg.tdqmc_params().unwrap()
    };
    let ens_s = init_ensemble(&small, &spec, RngStream::new(7, 0)).unwrap();
    let veffs = compute_effective_potentials(&ens_s, &spec);
    let points = ens_s.grid().points();
    let mut kernel_small = 0.0_f64;
    for k in 0..16 {
        let partner = ens_s.electron(1).walkers[k];
        for (g, &x) in points.iter().enumerate() {
            let pairwise = soft_core_potential(x, partner, &spec);
            kernel_small = kernel_small.max((veffs[0][(k, g)] - pairwise).abs());
        }
    }
    let wide = TdqmcParams { sigma: vec![1e4, 1e4], ..small.clone() };
    let ens_w = init_ensemble(&wide, &spec, RngStream::new(7, 0)).unwrap();
    let veffs_w = compute_effective_potentials(&ens_w, &spec);
    let mut kernel_wide = 0.0_f64;
    for k in 1..16 {
        for g in 0..points.len() {
            kernel_wide = kernel_wide.max((veffs_w[0][(k, g)] - veffs_w[0][(0, g)]).abs());
        }
    }
    let kernel_ok = kernel_small < 1e-6
        && kernel_wide < 1e-6
        && (kernel_weight(1.0, 1.0, 0.5).unwrap() - 1.0).abs() < 1e-15;

    // Walker histogram stationarity at M = 10^4: frozen harmonic ground
    // waves, drift-diffusion must sample |phi|^2 = Normal(0, 1/sqrt(2)).
    let m = 10_000;
    let big = TdqmcParams {
        n_walkers: m,
        init_width: 2.0,
        ..cfg.tdqmc_params().unwrap()
    };
    let spec_off = spec.without_interaction();
    let mut ens_ks = init_ensemble(&big, &spec_off, RngStream::new(42, 0)).unwrap();
    let dx = ens_ks.grid().dx();
    let gp = ens_ks.grid().points();
    let ground_wave: Vec<Complex64> =
        gp.iter().map(|&x| Complex64::new((-x * x / 2.0).exp(), 0.0)).collect();
    let wnorm = (ground_wave.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx).sqrt();
    for i in 0..2 {
        for wave in &mut ens_ks.electron_mut(i).waves {
            *wave = ground_wave.iter().map(|v| v / wnorm).collect();
        }
    }
    let step = ImaginaryStepParams { dtau: 0.01, diffusion: 0.5, include_drift: true };
    for _ in 0..600 {
        walker_drift_diffusion_step(&mut ens_ks, &step);
    }
    let mut xs = ens_ks.electron(0).walkers.clone();
    xs.sort_by(f64::total_cmp);
    let target = Normal::new(0.0, 1.0 / 2.0_f64.sqrt()).unwrap();
    let ks = xs
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let c = target.cdf(x);
            (c - j as f64 / m as f64).abs().max(((j + 1) as f64 / m as f64 - c).abs())
        })
        .fold(0.0, f64::max);
    let ks_ok = ks < 0.05;

    // Seed determinism across worker counts: the sweep table must be
    // bit-identical under 1-thread and 2-thread pools.
    let sweep_params = TdqmcParams {
        n_walkers: 64,
        stage1_steps: 100,
        ..cfg.tdqmc_params().unwrap()
    };
    let sigmas = [0.7, 0.9];
    let run_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sigma_sweep(&sigmas, &sweep_params, &spec, 42).unwrap())
    };
    let workers_ok = run_pool(1) == run_pool(2);

    criterion(
        11,
        "invariants: norms, density matrix, kernel limits, KS, determinism",
        norm_ok && wave_ok && rho_ok && kernel_ok && ks_ok && workers_ok,
        format!(
            "norm {norm_defect:.1e}, wave {wave_defect:.1e}, trace {trace_defect:.1e}, \
             herm {herm_defect:.1e}, kernel {kernel_small:.1e}/{kernel_wide:.1e}, \
             KS {ks:.3}, workers {workers_ok}, {:.0}s",
            t0.elapsed().as_secs_f64()
        ),
    );
}
