//! Binary checkpoints: versioned header, little-endian payload, trailing
//! SHA-256 checksum. Round trips are bit-exact, including the stochastic
//! step counter and seed that define the RNG stream state.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Grid1D, Grid2D};
use crate::spectral2d::WaveFunction2D;
use crate::tdqmc::{ElectronSet, TdqmcEnsemble};

const MAGIC: &[u8; 5] = b"QNLCK";
const VERSION: u8 = 1;
const KIND_WAVE2D: u8 = 1;
const KIND_ENSEMBLE: u8 = 2;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(kind: u8) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.push(VERSION);
        buf.push(kind);
        Writer { buf }
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64_slice(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    fn complex_slice(&mut self, vs: &[Complex64]) {
        for v in vs {
            self.f64(v.re);
            self.f64(v.im);
        }
    }

    fn finish(mut self, path: &Path) -> Result<()> {
        let digest = Sha256::digest(&self.buf);
        self.buf.extend_from_slice(&digest);
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.buf)?;
        f.sync_all()?;
        Ok(())
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(buf: &'a [u8], kind: u8) -> Result<Self> {
        if buf.len() < MAGIC.len() + 2 + 32 {
            return Err(Error::invalid("checkpoint truncated"));
        }
        let (body, checksum) = buf.split_at(buf.len() - 32);
        if Sha256::digest(body).as_slice() != checksum {
            return Err(Error::invalid("checkpoint checksum mismatch"));
        }
        if &body[..MAGIC.len()] != MAGIC {
            return Err(Error::invalid("not a checkpoint file"));
        }
        if body[MAGIC.len()] != VERSION {
            return Err(Error::invalid(format!(
                "unsupported checkpoint version {}",
                body[MAGIC.len()]
            )));
        }
        if body[MAGIC.len() + 1] != kind {
            return Err(Error::invalid("checkpoint holds a different state kind"));
        }
        Ok(Reader { buf: body, pos: MAGIC.len() + 2 })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::invalid("checkpoint truncated"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn complex_vec(&mut self, n: usize) -> Result<Vec<Complex64>> {
        (0..n).map(|_| Ok(Complex64::new(self.f64()?, self.f64()?))).collect()
    }

    fn done(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::invalid("checkpoint has trailing bytes"));
        }
        Ok(())
    }
}

pub fn save_wave_checkpoint(wf: &WaveFunction2D, path: &Path) -> Result<()> {
    let mut w = Writer::new(KIND_WAVE2D);
    let g = wf.grid();
    w.u64(g.axis1.n_points() as u64);
    w.f64(g.axis1.span());
    w.u64(g.axis2.n_points() as u64);
    w.f64(g.axis2.span());
    w.f64(wf.time);
    w.complex_slice(wf.amplitudes());
    w.finish(path)
}

pub fn load_wave_checkpoint(path: &Path) -> Result<WaveFunction2D> {
    let bytes = std::fs::read(path)?;
    let mut r = Reader::open(&bytes, KIND_WAVE2D)?;
    let n1 = r.u64()? as usize;
    let span1 = r.f64()?;
    let n2 = r.u64()? as usize;
    let span2 = r.f64()?;
    let time = r.f64()?;
    let grid = Grid2D::new(Grid1D::new(n1, span1)?, Grid1D::new(n2, span2)?);
    let amp = r.complex_vec(n1 * n2)?;
    r.done()?;
    WaveFunction2D::new(grid, amp, time)
}

pub fn save_ensemble_checkpoint(ens: &TdqmcEnsemble, path: &Path) -> Result<()> {
    let mut w = Writer::new(KIND_ENSEMBLE);
    w.u64(ens.n_electrons() as u64);
    w.u64(ens.n_walkers() as u64);
    w.u64(ens.grid().n_points() as u64);
    w.f64(ens.grid().span());
    w.f64(ens.time);
    w.u64(ens.step_count);
    w.u64(ens.master_seed);
    for i in 0..ens.n_electrons() {
        let set = ens.electron(i);
        w.f64(set.sigma);
        w.f64_slice(&set.walkers);
        w.f64_slice(&set.last_velocity);
        for wave in &set.waves {
            w.complex_slice(wave);
        }
    }
    w.finish(path)
}

pub fn load_ensemble_checkpoint(path: &Path) -> Result<TdqmcEnsemble> {
    let bytes = std::fs::read(path)?;
    let mut r = Reader::open(&bytes, KIND_ENSEMBLE)?;
    let n_el = r.u64()? as usize;
    let m = r.u64()? as usize;
    let n = r.u64()? as usize;
    let span = r.f64()?;
    let time = r.f64()?;
    let step_count = r.u64()?;
    let master_seed = r.u64()?;
    let grid = Grid1D::new(n, span)?;
    let mut electrons = Vec::with_capacity(n_el);
    for _ in 0..n_el {
        let sigma = r.f64()?;
        let walkers = r.f64_vec(m)?;
        let last_velocity = r.f64_vec(m)?;
        let waves = (0..m).map(|_| r.complex_vec(n)).collect::<Result<Vec<_>>>()?;
        electrons.push(ElectronSet { waves, walkers, sigma, last_velocity });
    }
    r.done()?;
    TdqmcEnsemble::from_parts(grid, electrons, time, step_count, master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RngStream, SystemSpec};
    use crate::tdqmc::{init_ensemble, TdqmcParams};

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(name);
        std::mem::forget(dir);
        p
    }

    #[test]
    fn wave_round_trip_is_bit_exact() {
        let grid = Grid2D::square(Grid1D::new(32, 10.0).unwrap());
        let mut wf = WaveFunction2D::gaussian(grid, 1.3).unwrap();
        wf.time = 2.75;
        let path = tmp("wave.ck");
        save_wave_checkpoint(&wf, &path).unwrap();
        let back = load_wave_checkpoint(&path).unwrap();
        assert_eq!(wf, back);
    }

    #[test]
    fn ensemble_round_trip_is_bit_exact() {
        let spec = SystemSpec::default();
        let params = TdqmcParams { n_walkers: 5, ..TdqmcParams::default() };
        let mut ens = init_ensemble(&params, &spec, RngStream::new(42, 0)).unwrap();
        ens.time = 1.5;
        ens.step_count = 77;
        let path = tmp("ens.ck");
        save_ensemble_checkpoint(&ens, &path).unwrap();
        let back = load_ensemble_checkpoint(&path).unwrap();
        assert_eq!(ens, back);
    }

    #[test]
    fn repeated_saves_are_byte_identical() {
        let spec = SystemSpec::default();
        let params = TdqmcParams { n_walkers: 3, ..TdqmcParams::default() };
        let ens = init_ensemble(&params, &spec, RngStream::new(1, 0)).unwrap();
        let (p1, p2) = (tmp("a.ck"), tmp("b.ck"));
        save_ensemble_checkpoint(&ens, &p1).unwrap();
        let loaded = load_ensemble_checkpoint(&p1).unwrap();
        save_ensemble_checkpoint(&loaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn corruption_is_detected() {
        let grid = Grid2D::square(Grid1D::new(16, 8.0).unwrap());
        let wf = WaveFunction2D::gaussian(grid, 1.0).unwrap();
        let path = tmp("c.ck");
        save_wave_checkpoint(&wf, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_wave_checkpoint(&path).is_err());
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let grid = Grid2D::square(Grid1D::new(16, 8.0).unwrap());
        let wf = WaveFunction2D::gaussian(grid, 1.0).unwrap();
        let path = tmp("k.ck");
        save_wave_checkpoint(&wf, &path).unwrap();
        assert!(load_ensemble_checkpoint(&path).is_err());
    }
}
