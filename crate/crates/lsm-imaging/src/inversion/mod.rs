//! Regularized inversion of the scattering equation and indicator maps.
//!
//! For every sampling point the scattering equation N g = φ is solved in
//! the Tikhonov sense with the weight chosen by the Morozov discrepancy
//! principle, and the indicator is the reciprocal solution norm, minimized
//! over the trial parameters (polarization, activation time).

pub mod maps;
pub mod morozov;
pub mod operator;
pub mod tikhonov;

use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use maps::{lsm_map, tlsm_map};
pub use morozov::{morozov_select, MorozovOutcome};
pub use operator::{NearFieldOperatorFreq, NearFieldOperatorTime};

use crate::dataops::io::{check_magic, read_f64, read_u32, write_f64, write_u32};
use crate::dataops::DataError;
use crate::triallib::SamplingGrid;

#[derive(Debug, Error)]
pub enum InvError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("zero right-hand side: the trial pattern carries no signal")]
    DegenerateRhs,
    #[error("metadata mismatch: {0}")]
    Metadata(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Which solver factorizes the scattering equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// Dense SVD when the matrix fits `dense_limit`, projected otherwise.
    Auto,
    DenseSvd,
    ProjectedBidiagonalization,
}

/// Regularization policy shared by both domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationConfig {
    /// Relative noise level δ: the Morozov target is δ·‖φ‖.
    pub delta: f64,
    /// η search range relative to σ₁² of the (projected) operator, so the
    /// same config works across resolutions.
    pub eta_min_rel: f64,
    pub eta_max_rel: f64,
    pub solver: SolverMode,
    /// Golub–Kahan projection dimension cap.
    pub projection_cap: usize,
    /// Largest flattened matrix dimension the dense path accepts.
    pub dense_limit: usize,
}

impl Default for RegularizationConfig {
    fn default() -> Self {
        RegularizationConfig {
            delta: 1e-3,
            eta_min_rel: 1e-12,
            eta_max_rel: 1e4,
            solver: SolverMode::Auto,
            projection_cap: 60,
            dense_limit: 4096,
        }
    }
}

impl RegularizationConfig {
    pub fn validate(&self) -> Result<(), InvError> {
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return Err(InvError::Parameter(format!(
                "noise level δ must lie in [0, 1), got {}",
                self.delta
            )));
        }
        if !(self.eta_min_rel > 0.0 && self.eta_max_rel > self.eta_min_rel) {
            return Err(InvError::Parameter(
                "η range must be positive and increasing".into(),
            ));
        }
        if self.projection_cap == 0 {
            return Err(InvError::Parameter("projection cap must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Effective Morozov target fraction; a zero δ still needs a positive
    /// discrepancy to aim for.
    pub(crate) fn delta_floor(&self) -> f64 {
        self.delta.max(1e-6)
    }
}

/// Outcome of one trial-pattern solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveRecord {
    /// Sampling-point, polarization, and outset indices.
    pub s: usize,
    pub n: usize,
    pub r: usize,
    pub eta: f64,
    pub residual_norm: f64,
    pub solution_norm: f64,
    pub saturated: bool,
    /// √dt per time sample (0 for frequency-domain solves).
    pub weight_time: f64,
    /// √Δy per source point.
    pub weight_src: f64,
}

/// Which formulation produced a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapDomain {
    Time,
    Freq,
}

/// Indicator values over the sampling grid (raw, unnormalized).
#[derive(Debug, Clone)]
pub struct IndicatorMap {
    pub grid: SamplingGrid,
    /// Raw indicator per point, z-major like the grid flattening.
    pub values: Vec<f64>,
    /// Winning (polarization, outset) per point.
    pub winners: Vec<(u32, u32)>,
    pub domain: MapDomain,
    /// Raised when every solve saturated or carried no signal; such a map
    /// has no meaningful peaks.
    pub degenerate: bool,
    /// Hash of the producing configuration, embedded in artifacts.
    pub config_hash: u64,
}

impl IndicatorMap {
    /// Values scaled to [0, 1] by the map maximum, plus the maximum used.
    /// Degenerate maps normalize to all zeros.
    pub fn normalized(&self) -> (Vec<f64>, f64) {
        let max = self.values.iter().cloned().fold(0.0_f64, f64::max);
        if max <= 0.0 {
            return (vec![0.0; self.values.len()], 0.0);
        }
        (self.values.iter().map(|v| v / max).collect(), max)
    }

    pub fn value_at(&self, ix: usize, iz: usize) -> f64 {
        self.values[iz * self.grid.n_x + ix]
    }

    /// Flattened index of the largest value.
    pub fn argmax(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite indicator"))
            .map(|(k, _)| k)
            .unwrap_or(0)
    }
}

const MAP_MAGIC: &[u8; 8] = b"LUMP0001";

/// Persist a map: header (grid, domain tag, config hash), then f64 values
/// in row-major (z-major) grid order.
pub fn write_map(map: &IndicatorMap, path: &Path) -> Result<(), InvError> {
    let file = std::fs::File::create(path).map_err(DataError::from)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAP_MAGIC).map_err(DataError::from)?;
    write_u32(
        &mut w,
        match map.domain {
            MapDomain::Time => 0,
            MapDomain::Freq => 1,
        },
    )?;
    write_u32(&mut w, map.grid.n_x as u32)?;
    write_u32(&mut w, map.grid.n_z as u32)?;
    write_f64(&mut w, map.grid.x0)?;
    write_f64(&mut w, map.grid.x1)?;
    write_f64(&mut w, map.grid.z0)?;
    write_f64(&mut w, map.grid.z1)?;
    w.write_all(&map.config_hash.to_le_bytes())
        .map_err(DataError::from)?;
    write_u32(&mut w, map.degenerate as u32)?;
    for &v in &map.values {
        write_f64(&mut w, v)?;
    }
    Ok(())
}

/// Read a map back; winners are not persisted and come back empty.
pub fn read_map(path: &Path) -> Result<IndicatorMap, InvError> {
    let file = std::fs::File::open(path).map_err(DataError::from)?;
    let mut r = BufReader::new(file);
    check_magic(&mut r, MAP_MAGIC)?;
    let domain = match read_u32(&mut r, "domain")? {
        0 => MapDomain::Time,
        1 => MapDomain::Freq,
        other => {
            return Err(InvError::Data(DataError::Format(format!(
                "unknown map domain {other}"
            ))))
        }
    };
    let n_x = read_u32(&mut r, "n_x")? as usize;
    let n_z = read_u32(&mut r, "n_z")? as usize;
    let x0 = read_f64(&mut r, "x0")?;
    let x1 = read_f64(&mut r, "x1")?;
    let z0 = read_f64(&mut r, "z0")?;
    let z1 = read_f64(&mut r, "z1")?;
    let mut hash = [0u8; 8];
    std::io::Read::read_exact(&mut r, &mut hash)
        .map_err(|_| DataError::Truncated("while reading the config hash".into()))?;
    let degenerate = read_u32(&mut r, "degenerate flag")? != 0;
    let total = n_x
        .checked_mul(n_z)
        .ok_or_else(|| DataError::Dimension("map size overflows".into()))?;
    let mut values = Vec::with_capacity(total);
    for k in 0..total {
        values.push(read_f64(&mut r, &format!("value {k}"))?);
    }
    Ok(IndicatorMap {
        grid: SamplingGrid {
            x0,
            x1,
            z0,
            z1,
            n_x,
            n_z,
        },
        values,
        winners: Vec::new(),
        domain,
        degenerate,
        config_hash: u64::from_le_bytes(hash),
    })
}

/// CSV export: x, z, value rows in grid order.
pub fn export_map_csv(map: &IndicatorMap, path: &Path) -> Result<(), InvError> {
    let file = std::fs::File::create(path).map_err(DataError::from)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "x,z,value").map_err(DataError::from)?;
    for s in 0..map.grid.n_points() {
        let (x, z) = map.grid.point(s);
        writeln!(w, "{x:e},{z:e},{:e}", map.values[s]).map_err(DataError::from)?;
    }
    Ok(())
}

/// Write solve records as CSV for run reports.
pub fn export_records_csv(records: &[SolveRecord], path: &Path) -> Result<(), InvError> {
    let file = std::fs::File::create(path).map_err(DataError::from)?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "s,n,r,eta,residual_norm,solution_norm,saturated,weight_time,weight_src"
    )
    .map_err(DataError::from)?;
    for rec in records {
        writeln!(
            w,
            "{},{},{},{:e},{:e},{:e},{},{:e},{:e}",
            rec.s,
            rec.n,
            rec.r,
            rec.eta,
            rec.residual_norm,
            rec.solution_norm,
            rec.saturated as u32,
            rec.weight_time,
            rec.weight_src
        )
        .map_err(DataError::from)?;
    }
    Ok(())
}
