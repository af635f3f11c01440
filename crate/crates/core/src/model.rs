//! Shared domain types: real-space grids, system and field parameters,
//! and seeded RNG streams. Everything here is an immutable value object,
//! safe to share across workers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform 1D grid on a periodic box of total extent `span`, centered at 0.
/// Points are x_m = -span/2 + m*dx, m = 0..n-1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_points: usize,
    span: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, span: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::invalid(format!(
                "grid n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !(span > 0.0) || !span.is_finite() {
            return Err(Error::invalid(format!("grid span must be positive, got {span}")));
        }
        Ok(Grid1D { n_points, span })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn dx(&self) -> f64 {
        self.span / self.n_points as f64
    }

    pub fn point(&self, m: usize) -> f64 {
        debug_assert!(m < self.n_points);
        -0.5 * self.span + m as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|m| self.point(m)).collect()
    }

    /// Angular wavenumbers in FFT bin order: k_m = 2π m / span for
    /// m < n/2, and 2π (m - n)/span above.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        let dk = 2.0 * std::f64::consts::PI / self.span;
        (0..n)
            .map(|m| {
                let m = if m < n / 2 { m } else { m - n };
                m as f64 * dk
            })
            .collect()
    }

    pub fn min(&self) -> f64 {
        -0.5 * self.span
    }

    pub fn max(&self) -> f64 {
        -0.5 * self.span + (self.n_points - 1) as f64 * self.dx()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min() && x <= self.max()
    }
}

/// Configuration-space grid (x1, x2): the tensor product of two 1D axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub axis1: Grid1D,
    pub axis2: Grid1D,
}

impl Grid2D {
    pub fn new(axis1: Grid1D, axis2: Grid1D) -> Self {
        Grid2D { axis1, axis2 }
    }

    pub fn square(axis: Grid1D) -> Self {
        Grid2D { axis1: axis, axis2: axis }
    }

    pub fn len(&self) -> usize {
        self.axis1.n_points() * self.axis2.n_points()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major flat index: i1 slow, i2 fast.
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.axis2.n_points() + i2
    }

    pub fn cell_area(&self) -> f64 {
        self.axis1.dx() * self.axis2.dx()
    }
}

/// Physical parameters of the confined electron pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSpec {
    pub n_electrons: usize,
    /// Coefficient c in the confinement V_en(x) = c x².
    pub confinement_strength: f64,
    /// Softening constant under the square root of the pair potential.
    pub softcore_a: f64,
    pub interaction_on: bool,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            n_electrons: 2,
            confinement_strength: 0.5,
            softcore_a: 1.0,
            interaction_on: true,
        }
    }
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_electrons < 1 {
            return Err(Error::invalid("n_electrons must be >= 1"));
        }
        if !(self.confinement_strength > 0.0) {
            return Err(Error::invalid("confinement_strength must be > 0"));
        }
        if !(self.softcore_a > 0.0) {
            return Err(Error::invalid("softcore_a must be > 0"));
        }
        Ok(())
    }

    pub fn without_interaction(mut self) -> Self {
        self.interaction_on = false;
        self
    }
}

/// Harmonic confinement V_en(x) = c x².
pub fn confinement_potential(x: f64, spec: &SystemSpec) -> f64 {
    spec.confinement_strength * x * x
}

/// Soft-core pair repulsion 1/sqrt(a + (x1-x2)²); zero when the
/// interaction is switched off.
pub fn soft_core_potential(x1: f64, x2: f64, spec: &SystemSpec) -> f64 {
    if !spec.interaction_on {
        return 0.0;
    }
    let d = x1 - x2;
    1.0 / (spec.softcore_a + d * d).sqrt()
}

/// One sine drive channel: E(t) = amplitude * sin(omega t + phase) for
/// t >= t_on, zero before.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldChannel {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
    pub t_on: f64,
}

impl Default for FieldChannel {
    fn default() -> Self {
        FieldChannel { amplitude: 0.0, omega: 0.0, phase: 0.0, t_on: 0.0 }
    }
}

impl FieldChannel {
    pub fn sine(amplitude: f64, omega: f64) -> Self {
        FieldChannel { amplitude, omega, phase: 0.0, t_on: 0.0 }
    }

    pub fn value(&self, t: f64) -> f64 {
        if t < self.t_on || self.amplitude == 0.0 {
            0.0
        } else {
            self.amplitude * (self.omega * t + self.phase).sin()
        }
    }
}

/// Per-electron driving fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub channels: Vec<FieldChannel>,
}

impl FieldSpec {
    pub fn none(n_electrons: usize) -> Self {
        FieldSpec { channels: vec![FieldChannel::default(); n_electrons] }
    }

    /// Field on electron 1 only (the driven/idler setup).
    pub fn drive_first(amplitude: f64, omega: f64, n_electrons: usize) -> Self {
        let mut f = FieldSpec::none(n_electrons);
        f.channels[0] = FieldChannel::sine(amplitude, omega);
        f
    }

    /// The same drive applied to every electron.
    pub fn drive_all(amplitude: f64, omega: f64, n_electrons: usize) -> Self {
        FieldSpec { channels: vec![FieldChannel::sine(amplitude, omega); n_electrons] }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.channels.iter().enumerate() {
            if c.omega < 0.0 {
                return Err(Error::invalid(format!("field omega for electron {} must be >= 0", i + 1)));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.channels.iter().all(|c| c.amplitude == 0.0)
    }

    /// E_i(t) for electron index i (0-based).
    pub fn value(&self, t: f64, i: usize) -> f64 {
        self.channels[i].value(t)
    }

    /// Dipole coupling energy -E_i(t) x.
    pub fn dipole_potential(&self, x: f64, t: f64, i: usize) -> f64 {
        -self.value(t, i) * x
    }
}

/// Purpose tag for an RNG substream; keeps walker noise, initial sampling
/// and trajectory seeding on disjoint streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    InitWalkers,
    WalkerNoise,
    TrajectorySeeds,
    SweepPoint,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::InitWalkers => 1,
            StreamPurpose::WalkerNoise => 2,
            StreamPurpose::TrajectorySeeds => 3,
            StreamPurpose::SweepPoint => 4,
        }
    }
}

/// A reproducible, independent RNG substream identified by
/// (master_seed, stream_id). Equal pairs yield bit-identical sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream { master_seed, stream_id }
    }

    /// Substream for (purpose, electron, walker). Electron and walker
    /// indices are packed into the ChaCha stream word.
    pub fn for_walker(master_seed: u64, purpose: StreamPurpose, electron: usize, walker: usize) -> Self {
        let id = (purpose.tag() << 56) | ((electron as u64) << 48) | walker as u64;
        RngStream { master_seed, stream_id: id }
    }

    /// Substream for (purpose, electron, walker, step): every stochastic
    /// step of every walker owns a fresh stream, so results do not depend
    /// on scheduling or worker count.
    pub fn for_walker_step(
        master_seed: u64,
        purpose: StreamPurpose,
        electron: usize,
        walker: usize,
        step: u64,
    ) -> Self {
        let id = (purpose.tag() << 60)
            | ((electron as u64 & 0xf) << 56)
            | ((walker as u64 & 0xffff_ff) << 32)
            | (step & 0xffff_ffff);
        RngStream { master_seed, stream_id: id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id.into());
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::RngExt;

    #[test]
    fn grid_points_and_spacing() {
        let g = Grid1D::new(256, 20.0).unwrap();
        assert_eq!(g.dx(), 20.0 / 256.0);
        assert_eq!(g.point(0), -10.0);
        assert_relative_eq!(g.point(128), 0.0, epsilon = 1e-14);
        assert_eq!(g.points().len(), 256);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid1D::new(7, 20.0).is_err());
        assert!(Grid1D::new(48, 20.0).is_err());
        assert!(Grid1D::new(8, -1.0).is_err());
        assert!(Grid1D::new(8, 20.0).is_ok());
    }

    #[test]
    fn confinement_values() {
        let spec = SystemSpec::default();
        assert_eq!(confinement_potential(0.0, &spec), 0.0);
        assert_eq!(confinement_potential(1.0, &spec), 0.5);
        assert_eq!(confinement_potential(-2.0, &spec), 2.0);
    }

    #[test]
    fn confinement_even_symmetry() {
        let spec = SystemSpec::default();
        for x in [0.1, 0.5, 3.7, 9.9] {
            assert_eq!(confinement_potential(x, &spec), confinement_potential(-x, &spec));
        }
    }

    #[test]
    fn soft_core_values() {
        let spec = SystemSpec::default();
        assert_eq!(soft_core_potential(1.5, 1.5, &spec), 1.0);
        assert_relative_eq!(soft_core_potential(1.0, 0.0, &spec), 1.0 / 2.0_f64.sqrt(), epsilon = 1e-12);
        // Coulomb asymptote at large separation.
        assert!((soft_core_potential(50.0, -50.0, &spec) - 0.01).abs() < 1e-4);
        let off = spec.without_interaction();
        assert_eq!(soft_core_potential(1.0, 0.0, &off), 0.0);
    }

    #[test]
    fn soft_core_symmetric_and_positive() {
        let spec = SystemSpec::default();
        for (a, b) in [(0.0, 1.0), (-3.0, 2.5), (7.0, 7.5)] {
            assert_eq!(soft_core_potential(a, b, &spec), soft_core_potential(b, a, &spec));
            assert!(soft_core_potential(a, b, &spec) > 0.0);
        }
    }

    #[test]
    fn soft_core_coulomb_tail() {
        let spec = SystemSpec::default();
        let v = soft_core_potential(100.0, 0.0, &spec);
        assert!((v * 100.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn field_values() {
        let f = FieldSpec::drive_first(15.0, 5.0, 2);
        assert_eq!(f.value(0.0, 0), 0.0);
        let quarter = std::f64::consts::PI / (2.0 * 5.0);
        assert_relative_eq!(f.value(quarter, 0), 15.0, epsilon = 1e-12);
        // Idler channel stays dark.
        for t in [0.0, 0.3, 1.7, 12.0] {
            assert_eq!(f.value(t, 1), 0.0);
        }
    }

    #[test]
    fn field_switch_on_time() {
        let mut f = FieldSpec::drive_first(15.0, 5.0, 2);
        f.channels[0].t_on = 1.0;
        assert_eq!(f.value(0.5, 0), 0.0);
        assert_ne!(f.value(1.5, 0), 0.0);
    }

    #[test]
    fn dipole_potential_sign() {
        let f = FieldSpec::drive_first(15.0, 5.0, 2);
        let quarter = std::f64::consts::PI / (2.0 * 5.0);
        assert_relative_eq!(f.dipole_potential(2.0, quarter, 0), -30.0, epsilon = 1e-10);
        assert_eq!(f.dipole_potential(2.0, 0.3, 1), 0.0);
        // Positive field, positive x => negative energy.
        assert!(f.dipole_potential(1.0, quarter, 0) < 0.0);
    }

    #[test]
    fn rng_streams_reproducible_and_distinct() {
        let a = RngStream::new(42, 7);
        let b = RngStream::new(42, 7);
        let mut ra = a.rng();
        let mut rb = b.rng();
        let xs: Vec<u64> = (0..16).map(|_| ra.random()).collect();
        let ys: Vec<u64> = (0..16).map(|_| rb.random()).collect();
        assert_eq!(xs, ys);

        let mut rc = RngStream::new(42, 8).rng();
        let zs: Vec<u64> = (0..16).map(|_| rc.random()).collect();
        assert_ne!(xs, zs);
    }
}
