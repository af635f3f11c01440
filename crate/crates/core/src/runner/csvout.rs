//! CSV emission with an overwrite guard: existing files are refused
//! unless the caller passes force.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::SweepTable;
use crate::error::{Error, Result};
use crate::spectral2d::{DipoleSeries, TrajectorySet};

fn create(path: &Path, force: bool) -> Result<BufWriter<std::fs::File>> {
    if path.exists() && !force {
        return Err(Error::invalid(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(std::fs::File::create(path)?))
}

pub fn write_dipoles(path: &Path, series: &DipoleSeries, force: bool) -> Result<()> {
    if series.is_empty() {
        return Err(Error::invalid("refusing to write an empty dipole series"));
    }
    let mut f = create(path, force)?;
    writeln!(f, "t,d1,d2")?;
    for i in 0..series.len() {
        writeln!(f, "{:.9},{:.9e},{:.9e}", series.times[i], series.d1[i], series.d2[i])?;
    }
    Ok(())
}

/// Long format: one row per (time, track).
pub fn write_trajectories(path: &Path, set: &TrajectorySet, force: bool) -> Result<()> {
    if set.times.is_empty() || set.tracks.is_empty() {
        return Err(Error::invalid("refusing to write an empty trajectory set"));
    }
    let mut f = create(path, force)?;
    writeln!(f, "t,track,x1,x2,flagged")?;
    for (k, track) in set.tracks.iter().enumerate() {
        for (s, &(x1, x2)) in track.iter().enumerate() {
            writeln!(f, "{:.9},{k},{:.9e},{:.9e},{}", set.times[s], x1, x2, set.flagged[k])?;
        }
    }
    Ok(())
}

pub fn write_sweep(path: &Path, table: &SweepTable, force: bool) -> Result<()> {
    let mut f = create(path, force)?;
    writeln!(f, "sigma,E,E_stderr,seed,M,converged")?;
    for row in table.rows() {
        writeln!(
            f,
            "{:.6},{:.9e},{:.3e},{},{},{}",
            row.sigma, row.energy, row.stderr, row.seed, row.n_walkers, row.converged
        )?;
    }
    Ok(())
}

/// Ground-state preparation record: `tau,E1,E2,stderr` per sample.
pub fn write_energy_series(path: &Path, rows: &[(f64, f64, f64, f64)], force: bool) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("refusing to write an empty energy series"));
    }
    let mut f = create(path, force)?;
    writeln!(f, "tau,E1,E2,stderr")?;
    for &(tau, e1, e2, stderr) in rows {
        writeln!(f, "{tau:.9},{e1:.9e},{e2:.9e},{stderr:.3e}")?;
    }
    Ok(())
}

/// Entropy columns over a shared time axis; `columns` pairs a header
/// label (e.g. "S_exact", "S_tdqmc_0.82") with its values.
pub fn write_entropy(
    path: &Path,
    times: &[f64],
    columns: &[(String, Vec<f64>)],
    force: bool,
) -> Result<()> {
    if times.is_empty() || columns.is_empty() {
        return Err(Error::invalid("refusing to write an empty entropy series"));
    }
    for (label, vals) in columns {
        if vals.len() != times.len() {
            return Err(Error::invalid(format!("entropy column {label} length mismatch")));
        }
    }
    let mut f = create(path, force)?;
    let header: Vec<&str> = columns.iter().map(|(l, _)| l.as_str()).collect();
    writeln!(f, "t,{}", header.join(","))?;
    for (s, &t) in times.iter().enumerate() {
        let row: Vec<String> = columns.iter().map(|(_, v)| format!("{:.9e}", v[s])).collect();
        writeln!(f, "{t:.9},{}", row.join(","))?;
    }
    Ok(())
}

/// Small key-value summary file (one `key = value` per line).
pub fn write_summary(path: &Path, pairs: &[(String, String)], force: bool) -> Result<()> {
    let mut f = create(path, force)?;
    for (k, v) in pairs {
        writeln!(f, "{k} = {v}")?;
    }
    Ok(())
}
