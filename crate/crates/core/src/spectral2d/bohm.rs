//! Bohmian velocities from the two-body wave function and trajectory
//! integration synchronized to propagation snapshots.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::Fft2d;
use crate::model::Grid2D;
use crate::spectral2d::series::TrajectorySet;
use crate::spectral2d::wave::WaveFunction2D;

/// Relative density below which a point counts as a node.
pub const NODE_GUARD: f64 = 1e-12;

/// Psi and its spectral gradient on the grid, ready for off-grid
/// velocity evaluation by bilinear interpolation.
pub struct VelocityField {
    grid: Grid2D,
    psi: Vec<Complex64>,
    g1: Vec<Complex64>,
    g2: Vec<Complex64>,
    max_density: f64,
    pub time: f64,
}

impl VelocityField {
    pub fn from_wave(wf: &WaveFunction2D) -> Self {
        let grid = *wf.grid();
        let (n1, n2) = (grid.axis1.n_points(), grid.axis2.n_points());
        let fft = Fft2d::new(n1, n2);
        let mut scratch = Vec::new();
        let mut hat = wf.amplitudes().to_vec();
        fft.forward(&mut hat, &mut scratch);
        let k1 = grid.axis1.wavenumbers();
        let k2 = grid.axis2.wavenumbers();
        let mut g1 = hat.clone();
        let mut g2 = hat;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let idx = grid.index(i1, i2);
                g1[idx] *= Complex64::new(0.0, k1[i1]);
                g2[idx] *= Complex64::new(0.0, k2[i2]);
            }
        }
        fft.inverse(&mut g1, &mut scratch);
        fft.inverse(&mut g2, &mut scratch);
        let max_density = wf.amplitudes().iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
        VelocityField {
            grid,
            psi: wf.amplitudes().to_vec(),
            g1,
            g2,
            max_density,
            time: wf.time,
        }
    }

    fn interp(&self, data: &[Complex64], i1: usize, i2: usize, f1: f64, f2: f64) -> Complex64 {
        let idx = |a: usize, b: usize| data[self.grid.index(a, b)];
        idx(i1, i2) * ((1.0 - f1) * (1.0 - f2))
            + idx(i1 + 1, i2) * (f1 * (1.0 - f2))
            + idx(i1, i2 + 1) * ((1.0 - f1) * f2)
            + idx(i1 + 1, i2 + 1) * (f1 * f2)
    }

    /// Im[grad Psi / Psi] at (x1, x2); None when the density falls below
    /// the node guard.
    pub fn velocity(&self, x1: f64, x2: f64) -> Option<(f64, f64)> {
        let a1 = &self.grid.axis1;
        let a2 = &self.grid.axis2;
        let cell = |x: f64, axis: &crate::model::Grid1D| -> (usize, f64) {
            let u = (x - axis.min()) / axis.dx();
            let i = (u.floor() as isize).clamp(0, axis.n_points() as isize - 2) as usize;
            (i, (u - i as f64).clamp(0.0, 1.0))
        };
        let (i1, f1) = cell(x1, a1);
        let (i2, f2) = cell(x2, a2);
        let psi = self.interp(&self.psi, i1, i2, f1, f2);
        if psi.norm_sqr() < NODE_GUARD * self.max_density {
            return None;
        }
        let v1 = (self.interp(&self.g1, i1, i2, f1, f2) / psi).im;
        let v2 = (self.interp(&self.g2, i1, i2, f1, f2) / psi).im;
        Some((v1, v2))
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
}

/// Velocity at a single point; node proximity is an error for this
/// one-shot entry point (trajectory integration reuses the previous
/// velocity instead).
pub fn bohm_velocity(wf: &WaveFunction2D, point: (f64, f64)) -> Result<(f64, f64)> {
    VelocityField::from_wave(wf)
        .velocity(point.0, point.1)
        .ok_or_else(|| Error::numerical(format!("node guard triggered at ({}, {})", point.0, point.1)))
}

/// Streaming trajectory integrator: fed consecutive velocity-field
/// snapshots, advances all trajectories with midpoint (RK2) substeps and
/// linear interpolation of the velocity field in time.
pub struct TrajectoryIntegrator {
    positions: Vec<(f64, f64)>,
    last_velocity: Vec<(f64, f64)>,
    active: Vec<bool>,
    flagged: Vec<bool>,
    times: Vec<f64>,
    tracks: Vec<Vec<(f64, f64)>>,
    substeps: usize,
}

impl TrajectoryIntegrator {
    pub fn new(start_points: Vec<(f64, f64)>, substeps: usize) -> Self {
        let k = start_points.len();
        TrajectoryIntegrator {
            tracks: start_points.iter().map(|&p| vec![p]).collect(),
            positions: start_points,
            last_velocity: vec![(0.0, 0.0); k],
            active: vec![true; k],
            flagged: vec![false; k],
            times: Vec::new(),
            substeps: substeps.max(1),
        }
    }

    /// First snapshot only records the starting time.
    pub fn start(&mut self, t0: f64) {
        self.times.push(t0);
    }

    /// Advance from the snapshot at `prev.time` to `next.time`.
    pub fn advance(&mut self, prev: &VelocityField, next: &VelocityField) {
        let t0 = prev.time;
        let t1 = next.time;
        let h = (t1 - t0) / self.substeps as f64;
        let grid = *prev.grid();
        for k in 0..self.positions.len() {
            if !self.active[k] {
                let last = *self.tracks[k].last().unwrap();
                self.tracks[k].push(last);
                continue;
            }
            let mut p = self.positions[k];
            for s in 0..self.substeps {
                let ta = (s as f64 * h) / (t1 - t0);
                let tm = ((s as f64 + 0.5) * h) / (t1 - t0);
                let sample = |x1: f64, x2: f64, w: f64| -> Option<(f64, f64)> {
                    let a = prev.velocity(x1, x2)?;
                    let b = next.velocity(x1, x2)?;
                    Some((a.0 + w * (b.0 - a.0), a.1 + w * (b.1 - a.1)))
                };
                let v0 = match sample(p.0, p.1, ta) {
                    Some(v) => {
                        self.last_velocity[k] = v;
                        v
                    }
                    None => {
                        self.flagged[k] = true;
                        self.last_velocity[k]
                    }
                };
                let mid = (p.0 + 0.5 * h * v0.0, p.1 + 0.5 * h * v0.1);
                let vm = match sample(mid.0, mid.1, tm) {
                    Some(v) => {
                        self.last_velocity[k] = v;
                        v
                    }
                    None => {
                        self.flagged[k] = true;
                        self.last_velocity[k]
                    }
                };
                p = (p.0 + h * vm.0, p.1 + h * vm.1);
                if !grid.axis1.contains(p.0) || !grid.axis2.contains(p.1) {
                    // Left the box: clamp, flag, and stop integrating.
                    p.0 = p.0.clamp(grid.axis1.min(), grid.axis1.max());
                    p.1 = p.1.clamp(grid.axis2.min(), grid.axis2.max());
                    self.flagged[k] = true;
                    self.active[k] = false;
                    break;
                }
            }
            self.positions[k] = p;
            self.tracks[k].push(p);
        }
        self.times.push(t1);
    }

    pub fn finish(self) -> TrajectorySet {
        TrajectorySet { times: self.times, tracks: self.tracks, flagged: self.flagged }
    }
}

/// Integrate trajectories through a list of stored snapshots.
pub fn evolve_trajectories(
    snapshots: &[WaveFunction2D],
    start_points: Vec<(f64, f64)>,
    substeps: usize,
) -> Result<TrajectorySet> {
    if snapshots.len() < 2 {
        return Err(Error::invalid("evolve_trajectories needs at least two snapshots"));
    }
    let mut integrator = TrajectoryIntegrator::new(start_points, substeps);
    integrator.start(snapshots[0].time);
    let mut prev = VelocityField::from_wave(&snapshots[0]);
    for snap in &snapshots[1..] {
        let next = VelocityField::from_wave(snap);
        integrator.advance(&prev, &next);
        prev = next;
    }
    Ok(integrator.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Grid1D, SystemSpec};
    use crate::spectral2d::propagate::{PropagationMode, PropagationSchedule};
    use approx::assert_relative_eq;

    fn grid(n: usize) -> Grid2D {
        Grid2D::square(Grid1D::new(n, 20.0).unwrap())
    }

    #[test]
    fn real_wave_has_zero_velocity() {
        let wf = WaveFunction2D::gaussian(grid(64), 1.0).unwrap();
        let (v1, v2) = bohm_velocity(&wf, (0.3, -0.7)).unwrap();
        assert!(v1.abs() < 1e-10);
        assert!(v2.abs() < 1e-10);
    }

    #[test]
    fn plane_wave_velocity_matches_wavevector() {
        let g = grid(64);
        let k1 = 2.0 * std::f64::consts::PI / 20.0 * 3.0;
        let k2 = 2.0 * std::f64::consts::PI / 20.0 * -2.0;
        let x1 = g.axis1.points();
        let x2 = g.axis2.points();
        let mut amp = vec![Complex64::default(); g.len()];
        for i1 in 0..64 {
            for i2 in 0..64 {
                amp[g.index(i1, i2)] = Complex64::from_polar(1.0, k1 * x1[i1] + k2 * x2[i2]);
            }
        }
        let mut wf = WaveFunction2D::new(g, amp, 0.0).unwrap();
        wf.normalize();
        // Evaluate on grid nodes in the interior where the bilinear
        // interpolation is exact.
        let (v1, v2) = bohm_velocity(&wf, (x1[20], x2[40])).unwrap();
        assert_relative_eq!(v1, k1, epsilon = 1e-6);
        assert_relative_eq!(v2, k2, epsilon = 1e-6);
    }

    #[test]
    fn node_guard_triggers() {
        let g = grid(64);
        let wf = WaveFunction2D::gaussian(g, 0.5).unwrap();
        // Density at the far corner is astronomically below the guard.
        assert!(bohm_velocity(&wf, (-9.9, 9.9)).is_err());
    }

    #[test]
    fn stationary_state_trajectories_are_constant() {
        // The product Gaussian is the exact noninteracting ground state,
        // so the Bohmian velocity field is identically zero.
        let spec = SystemSpec::default().without_interaction();
        let wf = WaveFunction2D::gaussian(grid(64), 1.0).unwrap();
        let schedule = PropagationSchedule::new(0.002, 200, 20, PropagationMode::Real).unwrap();
        let (snaps, _) = crate::spectral2d::propagate::propagate_real(
            &wf,
            &spec,
            &crate::model::FieldSpec::none(2),
            &schedule,
        )
        .unwrap();
        let starts = vec![(0.0, 0.0), (0.5, -0.5), (-1.0, 0.3)];
        let set = evolve_trajectories(&snaps, starts.clone(), 4).unwrap();
        for (k, tr) in set.tracks.iter().enumerate() {
            for p in tr {
                assert!((p.0 - starts[k].0).abs() < 1e-6);
                assert!((p.1 - starts[k].1).abs() < 1e-6);
            }
        }
    }
}
