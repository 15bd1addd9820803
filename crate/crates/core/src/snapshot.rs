//! `SQGF` binary snapshots: magic, `u32` version, `u32` n, then `n * n`
//! little-endian `(re, im)` pairs of `f64` in storage order.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid, C64};

pub const MAGIC: &[u8; 4] = b"SQGF";
pub const VERSION: u32 = 1;

/// Largest tolerated reality or mean defect when reading.
pub const READ_TOL: f64 = 1e-12;

pub fn encode(f: &SpectralField) -> Vec<u8> {
    let n = f.grid().n();
    let mut out = Vec::with_capacity(12 + 16 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for c in f.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<SpectralField> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let n = word(8) as usize;
    let grid = TorusGrid::new(n)?;
    if bytes.len() != 12 + 16 * n * n {
        return Err(Error::Snapshot(format!("length {} does not match n = {n}", bytes.len())));
    }
    let coeffs: Vec<C64> = bytes[12..]
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let f = SpectralField::from_coeffs_unchecked(grid, coeffs);
    if let Some((a, b)) = f.first_non_finite() {
        return Err(Error::Snapshot(format!("non-finite coefficient at ({a}, {b})")));
    }
    let scale = f.l2proxy().max(1.0);
    let defect = f.reality_defect();
    if defect > READ_TOL * scale {
        return Err(Error::Snapshot(format!("not a real mean-zero field (defect {defect:e})")));
    }
    let h = n / 2;
    if (0..n).any(|t| f.coeffs()[h * n + t].norm() > 0.0 || f.coeffs()[t * n + h].norm() > 0.0) {
        return Err(Error::Snapshot("Nyquist modes are not zero".into()));
    }
    Ok(f)
}

/// Writes via a `.partial` sibling and renames into place.
pub fn write(path: &Path, f: &SpectralField) -> Result<()> {
    let tmp = partial_path(path);
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(&encode(f))?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<SpectralField> {
    decode(&fs::read(path)?)
}

pub fn partial_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}
