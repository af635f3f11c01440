//! Strang split-step Fourier propagation of the two-body wave function,
//! in real or imaginary time, plus the spectral energy functional and
//! imaginary-time ground-state relaxation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::Fft2d;
use crate::model::{confinement_potential, soft_core_potential, FieldSpec, Grid2D, SystemSpec};
use crate::spectral2d::series::DipoleSeries;
use crate::spectral2d::wave::WaveFunction2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    Real,
    Imaginary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSchedule {
    pub dt: f64,
    pub n_steps: usize,
    pub snapshot_stride: usize,
    pub mode: PropagationMode,
}

impl PropagationSchedule {
    pub fn new(dt: f64, n_steps: usize, snapshot_stride: usize, mode: PropagationMode) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid("schedule dt must be > 0"));
        }
        if snapshot_stride == 0 {
            return Err(Error::invalid("snapshot_stride must be >= 1"));
        }
        Ok(PropagationSchedule { dt, n_steps, snapshot_stride, mode })
    }
}

/// Static potential V_en(x1) + V_en(x2) + V_ee(x1,x2) on the grid.
pub fn static_potential(grid: &Grid2D, spec: &SystemSpec) -> Vec<f64> {
    let x1 = grid.axis1.points();
    let x2 = grid.axis2.points();
    let mut v = vec![0.0; grid.len()];
    for (i1, &a) in x1.iter().enumerate() {
        let va = confinement_potential(a, spec);
        for (i2, &b) in x2.iter().enumerate() {
            v[grid.index(i1, i2)] = va + confinement_potential(b, spec) + soft_core_potential(a, b, spec);
        }
    }
    v
}

/// Split-step engine with precomputed kinetic and static-potential phase
/// tables for a fixed (grid, spec, dt, mode).
pub struct Propagator2D {
    grid: Grid2D,
    dt: f64,
    mode: PropagationMode,
    fft: Fft2d,
    scratch: Vec<Complex64>,
    kinetic_factor: Vec<Complex64>,
    static_half_factor: Vec<Complex64>,
    /// Probability allowed in the outermost cell ring before aborting.
    pub edge_tolerance: f64,
}

impl Propagator2D {
    pub fn new(grid: Grid2D, spec: &SystemSpec, dt: f64, mode: PropagationMode) -> Result<Self> {
        spec.validate()?;
        if !(dt > 0.0) {
            return Err(Error::invalid("dt must be > 0"));
        }
        let (n1, n2) = (grid.axis1.n_points(), grid.axis2.n_points());
        let k1 = grid.axis1.wavenumbers();
        let k2 = grid.axis2.wavenumbers();
        let mut kinetic_factor = vec![Complex64::default(); grid.len()];
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let e = 0.5 * (k1[i1] * k1[i1] + k2[i2] * k2[i2]);
                kinetic_factor[grid.index(i1, i2)] = match mode {
                    PropagationMode::Real => Complex64::from_polar(1.0, -e * dt),
                    PropagationMode::Imaginary => Complex64::new((-e * dt).exp(), 0.0),
                };
            }
        }
        let v = static_potential(&grid, spec);
        let static_half_factor = v
            .iter()
            .map(|&v| match mode {
                PropagationMode::Real => Complex64::from_polar(1.0, -v * dt * 0.5),
                PropagationMode::Imaginary => Complex64::new((-v * dt * 0.5).exp(), 0.0),
            })
            .collect();
        Ok(Propagator2D {
            grid,
            dt,
            mode,
            fft: Fft2d::new(n1, n2),
            scratch: Vec::new(),
            kinetic_factor,
            static_half_factor,
            edge_tolerance: 1e-6,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Half-step potential factor including the dipole drive sampled at
    /// the mid-step time.
    fn apply_potential_half(&self, wf: &mut WaveFunction2D, fields: Option<&FieldSpec>, t_mid: f64) {
        let n2 = self.grid.axis2.n_points();
        let amp = wf.amplitudes_mut();
        match fields {
            Some(f) if !f.is_zero() => {
                let e1 = f.value(t_mid, 0);
                let e2 = f.value(t_mid, 1);
                // Dipole energy is -E_i x_i; the phase per half step is
                // exp(-i V dt/2) = exp(+i E_i x_i dt/2).
                let axis_factor = |points: &[f64], e: f64| -> Vec<Complex64> {
                    points
                        .iter()
                        .map(|&x| match self.mode {
                            PropagationMode::Real => Complex64::from_polar(1.0, e * x * self.dt * 0.5),
                            PropagationMode::Imaginary => Complex64::new((e * x * self.dt * 0.5).exp(), 0.0),
                        })
                        .collect()
                };
                let f1 = axis_factor(&self.grid.axis1.points(), e1);
                let f2 = axis_factor(&self.grid.axis2.points(), e2);
                for (idx, a) in amp.iter_mut().enumerate() {
                    *a *= self.static_half_factor[idx] * f1[idx / n2] * f2[idx % n2];
                }
            }
            _ => {
                for (idx, a) in amp.iter_mut().enumerate() {
                    *a *= self.static_half_factor[idx];
                }
            }
        }
    }

    /// One Strang step: half potential, full kinetic (Fourier space),
    /// half potential. Imaginary mode renormalizes afterwards.
    pub fn step(&mut self, wf: &mut WaveFunction2D, fields: Option<&FieldSpec>) -> Result<()> {
        let t_mid = wf.time + 0.5 * self.dt;
        self.apply_potential_half(wf, fields, t_mid);
        {
            let buf = wf.buffer_mut();
            self.fft.forward(buf, &mut self.scratch);
            for (a, k) in buf.iter_mut().zip(&self.kinetic_factor) {
                *a *= k;
            }
            self.fft.inverse(buf, &mut self.scratch);
        }
        self.apply_potential_half(wf, fields, t_mid);
        wf.time += self.dt;
        if self.mode == PropagationMode::Imaginary {
            let n = wf.norm();
            if !n.is_finite() || n == 0.0 {
                return Err(Error::numerical(format!("imaginary-time step produced norm {n} at tau={}", wf.time)));
            }
            wf.normalize();
        } else {
            let n2 = wf.norm_sq();
            if !n2.is_finite() {
                return Err(Error::numerical(format!("NaN/Inf detected in real-time step at t={}", wf.time)));
            }
        }
        Ok(())
    }
}

/// <Psi|H|Psi> with the spectral kinetic term; field-free Hamiltonian.
pub fn energy_expectation(wf: &WaveFunction2D, spec: &SystemSpec) -> f64 {
    let grid = *wf.grid();
    let (n1, n2) = (grid.axis1.n_points(), grid.axis2.n_points());
    let fft = Fft2d::new(n1, n2);
    let mut buf = wf.amplitudes().to_vec();
    let mut scratch = Vec::new();
    fft.forward(&mut buf, &mut scratch);
    let k1 = grid.axis1.wavenumbers();
    let k2 = grid.axis2.wavenumbers();
    let mut kinetic = 0.0;
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let e = 0.5 * (k1[i1] * k1[i1] + k2[i2] * k2[i2]);
            kinetic += e * buf[grid.index(i1, i2)].norm_sqr();
        }
    }
    kinetic *= grid.cell_area() / (n1 * n2) as f64;
    let v = static_potential(&grid, spec);
    let potential: f64 = wf
        .amplitudes()
        .iter()
        .zip(&v)
        .map(|(a, &vv)| vv * a.norm_sqr())
        .sum::<f64>()
        * grid.cell_area();
    kinetic + potential
}

/// Imaginary-time relaxation until the energy is stationary:
/// |E(n) - E(n - stride)| < energy_tol, checked every `stride` steps.
pub fn relax_ground_state(
    mut wf: WaveFunction2D,
    spec: &SystemSpec,
    dtau: f64,
    energy_tol: f64,
    max_steps: usize,
) -> Result<(WaveFunction2D, f64)> {
    let mut prop = Propagator2D::new(*wf.grid(), spec, dtau, PropagationMode::Imaginary)?;
    let stride = 50;
    let mut last_energy = energy_expectation(&wf, spec);
    let mut steps = 0;
    while steps < max_steps {
        for _ in 0..stride {
            prop.step(&mut wf, None)?;
        }
        steps += stride;
        let e = energy_expectation(&wf, spec);
        if (e - last_energy).abs() < energy_tol {
            return Ok((wf, e));
        }
        last_energy = e;
    }
    Err(Error::numerical(format!(
        "imaginary-time relaxation did not converge within {max_steps} steps (last E = {last_energy:.6})"
    )))
}

/// Real-time propagation, invoking `observe` on the initial state and
/// after every `snapshot_stride` steps. Time-dependent potentials are
/// sampled at mid-step times. Aborts if probability reaches the box edge.
pub fn propagate_observed<F>(
    wf: &mut WaveFunction2D,
    spec: &SystemSpec,
    fields: &FieldSpec,
    schedule: &PropagationSchedule,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(&WaveFunction2D) -> Result<()>,
{
    if schedule.mode != PropagationMode::Real {
        return Err(Error::invalid("propagate_observed requires a real-time schedule"));
    }
    fields.validate()?;
    let mut prop = Propagator2D::new(*wf.grid(), spec, schedule.dt, PropagationMode::Real)?;
    observe(wf)?;
    let mut step = 0;
    while step < schedule.n_steps {
        let chunk = schedule.snapshot_stride.min(schedule.n_steps - step);
        for _ in 0..chunk {
            prop.step(wf, Some(fields))?;
        }
        step += chunk;
        let edge = wf.edge_probability();
        if edge > prop.edge_tolerance {
            return Err(Error::numerical(format!(
                "probability {edge:.3e} reached the box edge at t={}; enlarge the grid",
                wf.time
            )));
        }
        observe(wf)?;
    }
    Ok(())
}

/// Real-time propagation collecting snapshots and the dipole series.
/// Suitable for short runs and coarse grids; long runs should use
/// `propagate_observed` with streaming consumers.
pub fn propagate_real(
    wf: &WaveFunction2D,
    spec: &SystemSpec,
    fields: &FieldSpec,
    schedule: &PropagationSchedule,
) -> Result<(Vec<WaveFunction2D>, DipoleSeries)> {
    let mut state = wf.clone();
    let mut snapshots = Vec::new();
    let mut dipoles = DipoleSeries::default();
    propagate_observed(&mut state, spec, fields, schedule, |w| {
        dipoles.push(w.time, w.expectation_x(0), w.expectation_x(1));
        snapshots.push(w.clone());
        Ok(())
    })?;
    Ok((snapshots, dipoles))
}
