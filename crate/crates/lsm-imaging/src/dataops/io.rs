//! Bit-exact dataset container and CSV export.
//!
//! Layout: 8-byte magic `LUWF0001`, little-endian u32 fields (kind, N_m,
//! N_i, N_t), f64 dt, f64 receiver x-coordinates, f64 source
//! x-coordinates, then f64 samples in m-major, i-middle, t-minor order.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{BlockKind, DataError, WaveformBlock};
use crate::wavesim::{ArrayGeometry, TimeGrid};

pub const DATASET_MAGIC: &[u8; 8] = b"LUWF0001";

pub(crate) fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<(), DataError> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<(), DataError> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32, DataError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| DataError::Truncated(format!("while reading {what}")))?;
    Ok(u32::from_le_bytes(buf))
}

pub(crate) fn read_f64<R: Read>(r: &mut R, what: &str) -> Result<f64, DataError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| DataError::Truncated(format!("while reading {what}")))?;
    Ok(f64::from_le_bytes(buf))
}

pub(crate) fn check_magic<R: Read>(r: &mut R, magic: &[u8; 8]) -> Result<(), DataError> {
    let mut found = [0u8; 8];
    r.read_exact(&mut found)
        .map_err(|_| DataError::Truncated("while reading the magic header".into()))?;
    if &found != magic {
        return Err(DataError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&found),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

/// Serialize a block into the dataset container.
pub fn write_dataset(block: &WaveformBlock, path: &Path) -> Result<(), DataError> {
    block.validate()?;
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write_dataset_to(block, &mut w)
}

pub(crate) fn write_dataset_to<W: Write>(
    block: &WaveformBlock,
    w: &mut W,
) -> Result<(), DataError> {
    w.write_all(DATASET_MAGIC)?;
    write_u32(w, block.kind.code())?;
    write_u32(w, block.n_m() as u32)?;
    write_u32(w, block.n_i() as u32)?;
    write_u32(w, block.n_t() as u32)?;
    write_f64(w, block.grid.dt)?;
    for &x in &block.array.receivers {
        write_f64(w, x)?;
    }
    for &x in &block.array.sources {
        write_f64(w, x)?;
    }
    for &v in &block.values {
        write_f64(w, v)?;
    }
    Ok(())
}

/// Read a block back; the reverse of [`write_dataset`], bit-exact.
pub fn read_dataset(path: &Path) -> Result<WaveformBlock, DataError> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    read_dataset_from(&mut r)
}

pub(crate) fn read_dataset_from<R: Read>(r: &mut R) -> Result<WaveformBlock, DataError> {
    check_magic(r, DATASET_MAGIC)?;
    let kind_code = read_u32(r, "kind")?;
    let kind = BlockKind::from_code(kind_code)
        .ok_or_else(|| DataError::Format(format!("unknown block kind {kind_code}")))?;
    let n_m = read_u32(r, "N_m")? as usize;
    let n_i = read_u32(r, "N_i")? as usize;
    let n_t = read_u32(r, "N_t")? as usize;
    let dt = read_f64(r, "dt")?;
    let total = n_m
        .checked_mul(n_i)
        .and_then(|v| v.checked_mul(n_t))
        .ok_or_else(|| {
            DataError::Dimension(format!("sample count {n_m}×{n_i}×{n_t} overflows"))
        })?;
    if n_m == 0 || n_i == 0 || n_t == 0 {
        return Err(DataError::Dimension(
            "dataset dimensions must be positive".into(),
        ));
    }
    let mut receivers = Vec::with_capacity(n_m);
    for k in 0..n_m {
        receivers.push(read_f64(r, &format!("receiver {k}"))?);
    }
    let mut sources = Vec::with_capacity(n_i);
    for k in 0..n_i {
        sources.push(read_f64(r, &format!("source {k}"))?);
    }
    let mut values = Vec::with_capacity(total);
    for k in 0..total {
        values.push(read_f64(r, &format!("sample {k}"))?);
    }
    let grid = TimeGrid { dt, n_t };
    Ok(WaveformBlock {
        values,
        array: ArrayGeometry { sources, receivers },
        grid,
        kind,
    })
}

/// CSV export: header, then one row per (m, i) pair with the samples as
/// columns.
pub fn export_csv(block: &WaveformBlock, path: &Path) -> Result<(), DataError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write!(w, "m,i")?;
    for k in 1..=block.n_t() {
        write!(w, ",t{k}")?;
    }
    writeln!(w)?;
    for m in 0..block.n_m() {
        for i in 0..block.n_i() {
            write!(w, "{m},{i}")?;
            for v in block.trace(m, i) {
                write!(w, ",{v:e}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
