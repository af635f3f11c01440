//! Time-series records produced by propagation runs.

use crate::error::{Error, Result};

/// Per-electron dipole moments <x_i>(t).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DipoleSeries {
    pub times: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl DipoleSeries {
    pub fn push(&mut self, t: f64, d1: f64, d2: f64) {
        self.times.push(t);
        self.d1.push(d1);
        self.d2.push(d2);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_abs_d1(&self) -> f64 {
        self.d1.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn max_abs_d2(&self) -> f64 {
        self.d2.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }
}

/// Bohmian trajectories: one (x1, x2) track per starting point, sampled
/// at strictly increasing snapshot times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectorySet {
    pub times: Vec<f64>,
    /// tracks[k][step] = (x1, x2)
    pub tracks: Vec<Vec<(f64, f64)>>,
    /// Trajectories that hit a node guard or left the grid.
    pub flagged: Vec<bool>,
}

impl TrajectorySet {
    pub fn n_trajectories(&self) -> usize {
        self.tracks.len()
    }

    /// Largest |x2(t) - x2(0)| over all tracks and times.
    pub fn max_idler_deviation(&self) -> f64 {
        self.tracks
            .iter()
            .map(|tr| {
                let x0 = tr.first().map(|p| p.1).unwrap_or(0.0);
                tr.iter().fold(0.0_f64, |m, p| m.max((p.1 - x0).abs()))
            })
            .fold(0.0, f64::max)
    }

    /// Mean x-coordinate over tracks at each time, per axis.
    pub fn mean_positions(&self) -> (Vec<f64>, Vec<f64>) {
        let nt = self.times.len();
        let k = self.tracks.len().max(1) as f64;
        let mut m1 = vec![0.0; nt];
        let mut m2 = vec![0.0; nt];
        for tr in &self.tracks {
            for (s, &(x1, x2)) in tr.iter().enumerate() {
                m1[s] += x1;
                m2[s] += x2;
            }
        }
        for v in m1.iter_mut().chain(m2.iter_mut()) {
            *v /= k;
        }
        (m1, m2)
    }
}

fn check_time_axes(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12) {
        return Err(Error::invalid("subtract_reference: mismatched time axes"));
    }
    Ok(())
}

/// Pointwise difference a - b of two dipole series on identical time axes.
pub fn subtract_reference_dipoles(a: &DipoleSeries, b: &DipoleSeries) -> Result<DipoleSeries> {
    check_time_axes(&a.times, &b.times)?;
    Ok(DipoleSeries {
        times: a.times.clone(),
        d1: a.d1.iter().zip(&b.d1).map(|(x, y)| x - y).collect(),
        d2: a.d2.iter().zip(&b.d2).map(|(x, y)| x - y).collect(),
    })
}

/// Pointwise difference of trajectory sets (same start points, same times).
pub fn subtract_reference_trajectories(a: &TrajectorySet, b: &TrajectorySet) -> Result<TrajectorySet> {
    check_time_axes(&a.times, &b.times)?;
    if a.tracks.len() != b.tracks.len() {
        return Err(Error::invalid("subtract_reference: mismatched trajectory counts"));
    }
    let tracks = a
        .tracks
        .iter()
        .zip(&b.tracks)
        .map(|(ta, tb)| ta.iter().zip(tb).map(|(p, q)| (p.0 - q.0, p.1 - q.1)).collect())
        .collect();
    let flagged = a.flagged.iter().zip(&b.flagged).map(|(x, y)| *x || *y).collect();
    Ok(TrajectorySet { times: a.times.clone(), tracks, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(vals: &[(f64, f64, f64)]) -> DipoleSeries {
        let mut s = DipoleSeries::default();
        for &(t, a, b) in vals {
            s.push(t, a, b);
        }
        s
    }

    #[test]
    fn subtract_self_is_zero() {
        let a = series(&[(0.0, 1.0, 2.0), (0.1, 3.0, 4.0)]);
        let d = subtract_reference_dipoles(&a, &a).unwrap();
        assert!(d.d1.iter().chain(&d.d2).all(|&v| v == 0.0));
    }

    #[test]
    fn subtract_zero_is_identity() {
        let a = series(&[(0.0, 1.0, 2.0), (0.1, 3.0, 4.0)]);
        let z = series(&[(0.0, 0.0, 0.0), (0.1, 0.0, 0.0)]);
        let d = subtract_reference_dipoles(&a, &z).unwrap();
        assert_eq!(d, a);
    }

    #[test]
    fn subtract_rejects_mismatched_axes() {
        let a = series(&[(0.0, 1.0, 2.0)]);
        let b = series(&[(0.5, 1.0, 2.0)]);
        assert!(subtract_reference_dipoles(&a, &b).is_err());
    }
}
