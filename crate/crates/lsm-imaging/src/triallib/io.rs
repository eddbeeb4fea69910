//! Library persistence in the dataset binary container.
//!
//! Time form: the standard `LUWF0001` prefix with kind = 3, where the
//! "source" axis counts trial patterns, followed by an extended header
//! (sampling grid, polarization count, outsets, build provenance) and the
//! t₀ = 0 base samples in pattern-major order. Frequency form: kind = 4
//! with the band description and interleaved re/im pairs, column-major.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{
    BuildMethod, FreqLibrary, LibraryError, SamplingGrid, SignatureLibrary, TrialConfig,
};
use crate::dataops::io::{
    check_magic, read_f64, read_u32, write_f64, write_u32, DATASET_MAGIC,
};
use crate::dataops::DataError;
use crate::wavesim::{ArrayGeometry, TimeGrid};

const KIND_TIME_LIBRARY: u32 = 3;
const KIND_FREQ_LIBRARY: u32 = 4;

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<(), DataError> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64, DataError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| DataError::Truncated(format!("while reading {what}")))?;
    Ok(u64::from_le_bytes(buf))
}

fn write_grid<W: Write>(w: &mut W, g: &SamplingGrid) -> Result<(), DataError> {
    write_u32(w, g.n_x as u32)?;
    write_u32(w, g.n_z as u32)?;
    write_f64(w, g.x0)?;
    write_f64(w, g.x1)?;
    write_f64(w, g.z0)?;
    write_f64(w, g.z1)?;
    Ok(())
}

fn read_grid<R: Read>(r: &mut R) -> Result<SamplingGrid, DataError> {
    let n_x = read_u32(r, "grid n_x")? as usize;
    let n_z = read_u32(r, "grid n_z")? as usize;
    let x0 = read_f64(r, "grid x0")?;
    let x1 = read_f64(r, "grid x1")?;
    let z0 = read_f64(r, "grid z0")?;
    let z1 = read_f64(r, "grid z1")?;
    Ok(SamplingGrid {
        x0,
        x1,
        z0,
        z1,
        n_x,
        n_z,
    })
}

fn write_array<W: Write>(w: &mut W, a: &ArrayGeometry) -> Result<(), DataError> {
    write_u32(w, a.receivers.len() as u32)?;
    for &x in &a.receivers {
        write_f64(w, x)?;
    }
    write_u32(w, a.sources.len() as u32)?;
    for &x in &a.sources {
        write_f64(w, x)?;
    }
    Ok(())
}

fn read_array<R: Read>(r: &mut R) -> Result<ArrayGeometry, DataError> {
    let n_m = read_u32(r, "receiver count")? as usize;
    let mut receivers = Vec::with_capacity(n_m);
    for k in 0..n_m {
        receivers.push(read_f64(r, &format!("receiver {k}"))?);
    }
    let n_i = read_u32(r, "source count")? as usize;
    let mut sources = Vec::with_capacity(n_i);
    for k in 0..n_i {
        sources.push(read_f64(r, &format!("source {k}"))?);
    }
    Ok(ArrayGeometry { sources, receivers })
}

/// Persist a time-domain library.
pub fn write_time_library(lib: &SignatureLibrary, path: &Path) -> Result<(), LibraryError> {
    let file = std::fs::File::create(path).map_err(DataError::from)?;
    let mut w = BufWriter::new(file);
    w.write_all(DATASET_MAGIC).map_err(DataError::from)?;
    write_u32(&mut w, KIND_TIME_LIBRARY)?;
    write_u32(&mut w, lib.n_m() as u32)?;
    write_u32(&mut w, (lib.grid.n_points() * lib.config.n_p) as u32)?;
    write_u32(&mut w, lib.n_t() as u32)?;
    write_f64(&mut w, lib.time_grid.dt)?;
    write_grid(&mut w, &lib.grid)?;
    write_u32(&mut w, lib.config.n_p as u32)?;
    write_u32(&mut w, lib.config.outsets.len() as u32)?;
    for &t0 in &lib.config.outsets {
        write_f64(&mut w, t0)?;
    }
    write_u32(
        &mut w,
        match lib.method {
            BuildMethod::Direct => 0,
            BuildMethod::Reciprocal => 1,
        },
    )?;
    write_u64(&mut w, lib.background_hash)?;
    write_array(&mut w, &lib.array)?;
    for &v in &lib.base {
        write_f64(&mut w, v)?;
    }
    Ok(())
}

/// Read a time-domain library back.
pub fn read_time_library(path: &Path) -> Result<SignatureLibrary, LibraryError> {
    let file = std::fs::File::open(path).map_err(DataError::from)?;
    let mut r = BufReader::new(file);
    check_magic(&mut r, DATASET_MAGIC)?;
    let kind = read_u32(&mut r, "kind")?;
    if kind != KIND_TIME_LIBRARY {
        return Err(LibraryError::Data(DataError::Format(format!(
            "expected time-library kind {KIND_TIME_LIBRARY}, found {kind}"
        ))));
    }
    let n_m = read_u32(&mut r, "N_m")? as usize;
    let n_patterns = read_u32(&mut r, "pattern count")? as usize;
    let n_t = read_u32(&mut r, "N_t")? as usize;
    let dt = read_f64(&mut r, "dt")?;
    let grid = read_grid(&mut r)?;
    let n_p = read_u32(&mut r, "N_p")? as usize;
    let n_outsets = read_u32(&mut r, "outset count")? as usize;
    let mut outsets = Vec::with_capacity(n_outsets);
    for k in 0..n_outsets {
        outsets.push(read_f64(&mut r, &format!("outset {k}"))?);
    }
    let method = match read_u32(&mut r, "method")? {
        0 => BuildMethod::Direct,
        1 => BuildMethod::Reciprocal,
        other => {
            return Err(LibraryError::Data(DataError::Format(format!(
                "unknown build method {other}"
            ))))
        }
    };
    let background = read_u64(&mut r, "background hash")?;
    let array = read_array(&mut r)?;
    if n_patterns != grid.n_points() * n_p || n_m != array.n_receivers() {
        return Err(LibraryError::Data(DataError::Dimension(
            "library header is self-inconsistent".into(),
        )));
    }
    let total = n_patterns
        .checked_mul(n_m)
        .and_then(|v| v.checked_mul(n_t))
        .ok_or_else(|| DataError::Dimension("library sample count overflows".into()))?;
    let mut base = Vec::with_capacity(total);
    for k in 0..total {
        base.push(read_f64(&mut r, &format!("sample {k}"))?);
    }
    Ok(SignatureLibrary {
        base,
        grid,
        config: TrialConfig { n_p, outsets },
        array,
        time_grid: TimeGrid { dt, n_t },
        method,
        background_hash: background,
    })
}

/// Persist a frequency-form library.
pub fn write_freq_library(lib: &FreqLibrary, path: &Path) -> Result<(), LibraryError> {
    let file = std::fs::File::create(path).map_err(DataError::from)?;
    let mut w = BufWriter::new(file);
    w.write_all(DATASET_MAGIC).map_err(DataError::from)?;
    write_u32(&mut w, KIND_FREQ_LIBRARY)?;
    write_u32(&mut w, lib.n_m as u32)?;
    write_u32(&mut w, lib.n_cols() as u32)?;
    write_u32(&mut w, lib.freqs.len() as u32)?;
    write_f64(&mut w, lib.dt)?;
    write_u32(&mut w, lib.n_t as u32)?;
    write_grid(&mut w, &lib.grid)?;
    write_u32(&mut w, lib.n_p as u32)?;
    write_f64(&mut w, lib.tukey_factor)?;
    write_f64(&mut w, lib.freqs[0])?;
    write_f64(&mut w, *lib.freqs.last().expect("nonempty band"))?;
    write_u64(&mut w, lib.background_hash)?;
    write_array(&mut w, &lib.array)?;
    for c in &lib.columns {
        write_f64(&mut w, c.re)?;
        write_f64(&mut w, c.im)?;
    }
    Ok(())
}

/// Read a frequency-form library back.
pub fn read_freq_library(path: &Path) -> Result<FreqLibrary, LibraryError> {
    let file = std::fs::File::open(path).map_err(DataError::from)?;
    let mut r = BufReader::new(file);
    check_magic(&mut r, DATASET_MAGIC)?;
    let kind = read_u32(&mut r, "kind")?;
    if kind != KIND_FREQ_LIBRARY {
        return Err(LibraryError::Data(DataError::Format(format!(
            "expected frequency-library kind {KIND_FREQ_LIBRARY}, found {kind}"
        ))));
    }
    let n_m = read_u32(&mut r, "N_m")? as usize;
    let n_cols = read_u32(&mut r, "column count")? as usize;
    let n_omega = read_u32(&mut r, "N_omega")? as usize;
    let dt = read_f64(&mut r, "dt")?;
    let n_t = read_u32(&mut r, "N_t")? as usize;
    let grid = read_grid(&mut r)?;
    let n_p = read_u32(&mut r, "N_p")? as usize;
    let tukey_factor = read_f64(&mut r, "tukey factor")?;
    let f_lo = read_f64(&mut r, "f_lo")?;
    let f_hi = read_f64(&mut r, "f_hi")?;
    let background_hash = read_u64(&mut r, "background hash")?;
    let array = read_array(&mut r)?;
    if n_cols != grid.n_points() * n_p || n_m != array.n_receivers() {
        return Err(LibraryError::Data(DataError::Dimension(
            "library header is self-inconsistent".into(),
        )));
    }
    let rows = n_omega * n_m;
    let total = n_cols
        .checked_mul(rows)
        .ok_or_else(|| DataError::Dimension("library sample count overflows".into()))?;
    let mut columns = Vec::with_capacity(total);
    for k in 0..total {
        let re = read_f64(&mut r, &format!("sample {k} (re)"))?;
        let im = read_f64(&mut r, &format!("sample {k} (im)"))?;
        columns.push(Complex64::new(re, im));
    }
    Ok(FreqLibrary {
        columns,
        n_m,
        n_p,
        freqs: crate::dataops::spectra::uniform_band(f_lo, f_hi, n_omega),
        tukey_factor,
        grid,
        array,
        n_t,
        dt,
        background_hash,
    })
}
