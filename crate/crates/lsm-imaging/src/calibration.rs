//! Background model identification from arrival-time picks.
//!
//! The staged procedure mirrors how plate properties are read off array
//! waveforms: the surface-skimming longitudinal wave fixes c_L, the surface
//! acoustic wave fixes the Rayleigh speed and through it c_S, and the
//! bottom reflections LL/SS fix the thickness. Mode-converted LS arrivals
//! are reserved for verification.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wavesim::ArrayGeometry;

#[derive(Debug, Error)]
pub enum CalError {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("pick file error: {0}")]
    PickFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Propagation modes whose arrivals can be picked on array waveforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ArrivalMode {
    /// Surface-skimming longitudinal wave: t = d / c_L.
    Ssl,
    /// Surface acoustic (Rayleigh) wave: t = d / c_R.
    Saw,
    /// Bottom longitudinal reflection: t = 2√(h² + (d/2)²) / c_L.
    Ll,
    /// Bottom shear reflection: same path at c_S.
    Ss,
    /// Mode-converted bounce, minimized over the conversion point.
    Ls,
}

impl ArrivalMode {
    pub fn parse(s: &str) -> Option<ArrivalMode> {
        Some(match s.trim().to_ascii_uppercase().as_str() {
            "SSL" => ArrivalMode::Ssl,
            "SAW" => ArrivalMode::Saw,
            "LL" => ArrivalMode::Ll,
            "SS" => ArrivalMode::Ss,
            "LS" => ArrivalMode::Ls,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ArrivalMode::Ssl => "SSL",
            ArrivalMode::Saw => "SAW",
            ArrivalMode::Ll => "LL",
            ArrivalMode::Ss => "SS",
            ArrivalMode::Ls => "LS",
        }
    }
}

/// One picked arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalPick {
    pub mode: ArrivalMode,
    pub source_index: usize,
    pub receiver_index: usize,
    /// Arrival time, s.
    pub time: f64,
}

/// Picks plus the geometry that turns indices into offsets.
#[derive(Debug, Clone)]
pub struct ArrivalPickSet {
    pub picks: Vec<ArrivalPick>,
    pub geometry: ArrayGeometry,
}

impl ArrivalPickSet {
    pub fn validate(&self) -> Result<(), CalError> {
        self.geometry
            .validate()
            .map_err(|e| CalError::Parameter(e.to_string()))?;
        for p in &self.picks {
            if !(p.time > 0.0) {
                return Err(CalError::Parameter(format!(
                    "{} pick has non-positive time {}",
                    p.mode.name(),
                    p.time
                )));
            }
            if p.source_index >= self.geometry.n_sources()
                || p.receiver_index >= self.geometry.n_receivers()
            {
                return Err(CalError::Parameter(format!(
                    "pick indices ({}, {}) outside the array",
                    p.source_index, p.receiver_index
                )));
            }
        }
        Ok(())
    }

    fn offset(&self, p: &ArrivalPick) -> f64 {
        (self.geometry.receivers[p.receiver_index] - self.geometry.sources[p.source_index]).abs()
    }
}

/// Left-hand side of the Rayleigh secular equation,
/// (2 − c²/c_S²)² − 4·√(1 − c²/c_L²)·√(1 − c²/c_S²).
pub fn rayleigh_residual(c: f64, c_l: f64, c_s: f64) -> f64 {
    let a = 2.0 - (c * c) / (c_s * c_s);
    let p = (1.0 - (c * c) / (c_l * c_l)).max(0.0).sqrt();
    let q = (1.0 - (c * c) / (c_s * c_s)).max(0.0).sqrt();
    a * a - 4.0 * p * q
}

/// Rayleigh wave speed: the root of the secular equation in (0, c_S),
/// located by bisection until the residual is below 1e-12.
pub fn rayleigh_speed(c_l: f64, c_s: f64) -> Result<f64, CalError> {
    if !(c_l > c_s && c_s > 0.0) {
        return Err(CalError::Parameter(format!(
            "speeds must satisfy c_L > c_S > 0, got c_L={c_l}, c_S={c_s}"
        )));
    }
    // The secular function is negative between the trivial root at 0 and
    // the Rayleigh root, positive as c → c_S. Scan down from the shear
    // speed for a sign change; the root fraction depends on c_S/c_L.
    let hi0 = c_s * (1.0 - 1e-15);
    if !(rayleigh_residual(hi0, c_l, c_s) > 0.0) {
        return Err(CalError::Fit("secular equation failed to bracket".into()));
    }
    let mut lo = f64::NAN;
    for frac in [0.95, 0.9, 0.8, 0.65, 0.5, 0.3, 0.15, 0.05, 0.01] {
        if rayleigh_residual(frac * c_s, c_l, c_s) < 0.0 {
            lo = frac * c_s;
            break;
        }
    }
    if lo.is_nan() {
        return Err(CalError::Fit("secular equation failed to bracket".into()));
    }
    let mut hi = hi0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = rayleigh_residual(mid, c_l, c_s);
        if f.abs() <= 1e-13 || (hi - lo) < f64::EPSILON * c_s {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimizer of a unimodal function on [a, b].
fn golden_min(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Predicted arrival time of `mode` at source-receiver offset `d` for a
/// plate of thickness `h`.
pub fn predict_arrival(
    mode: ArrivalMode,
    d: f64,
    c_l: f64,
    c_s: f64,
    h: f64,
) -> Result<f64, CalError> {
    if d < 0.0 {
        return Err(CalError::Parameter(format!("offset must be ≥ 0, got {d}")));
    }
    if !(h > 0.0) {
        return Err(CalError::Parameter(format!(
            "thickness must be positive, got {h}"
        )));
    }
    Ok(match mode {
        ArrivalMode::Ssl => d / c_l,
        ArrivalMode::Saw => d / rayleigh_speed(c_l, c_s)?,
        ArrivalMode::Ll => 2.0 * (h * h + (d / 2.0) * (d / 2.0)).sqrt() / c_l,
        ArrivalMode::Ss => 2.0 * (h * h + (d / 2.0) * (d / 2.0)).sqrt() / c_s,
        ArrivalMode::Ls => {
            // Fermat path: bounce abscissa chosen to minimize total time.
            let time = |s: f64| {
                (h * h + s * s).sqrt() / c_l + (h * h + (d - s) * (d - s)).sqrt() / c_s
            };
            if d == 0.0 {
                time(0.0)
            } else {
                // Tolerance on s chosen so the time is resolved to 1e-12 s.
                let s_star = golden_min(0.0, d, 1e-12 * c_s.min(c_l), time);
                time(s_star)
            }
        }
    })
}

/// Identified background parameters and fit quality.
#[derive(Debug, Clone)]
pub struct BackgroundFit {
    pub c_l: f64,
    pub c_s: f64,
    /// Rayleigh speed implied by (c_l, c_s).
    pub c_r: f64,
    /// Plate thickness, m.
    pub thickness: f64,
    /// RMS time residual per fitted mode, s.
    pub residuals: Vec<(ArrivalMode, f64)>,
    /// RMS misfit of the LS verification picks, s (None without LS picks).
    pub ls_verification: Option<f64>,
}

fn through_origin_slope(pairs: &[(f64, f64)]) -> Option<f64> {
    // t = d/c: least squares gives 1/c = Σdt / Σd².
    let sdd: f64 = pairs.iter().map(|(d, _)| d * d).sum();
    let sdt: f64 = pairs.iter().map(|(d, t)| d * t).sum();
    if sdd <= 0.0 || sdt <= 0.0 {
        return None;
    }
    Some(sdd / sdt)
}

fn rms_time_residual(pairs: &[(f64, f64)], predict: impl Fn(f64) -> f64) -> f64 {
    let ss: f64 = pairs
        .iter()
        .map(|&(d, t)| {
            let r = t - predict(d);
            r * r
        })
        .sum();
    (ss / pairs.len() as f64).sqrt()
}

/// Staged least-squares identification of (c_L, c_S, h) from picks.
///
/// SSL fixes c_L (through-origin regression), SAW fixes the Rayleigh speed
/// which is inverted for c_S, and LL/SS fix the thickness separately (the
/// estimates are averaged). LS picks are never fitted; they only verify.
pub fn fit_background(picks: &ArrivalPickSet) -> Result<BackgroundFit, CalError> {
    picks.validate()?;
    let by_mode = |mode: ArrivalMode| -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = picks
            .picks
            .iter()
            .filter(|p| p.mode == mode)
            .map(|p| (picks.offset(p), p.time))
            .collect();
        // Deterministic evaluation order makes the fit independent of how
        // the picks were listed.
        pairs.sort_by(|a, b| a.partial_cmp(b).expect("finite pick values"));
        pairs
    };
    let ssl = by_mode(ArrivalMode::Ssl);
    let saw = by_mode(ArrivalMode::Saw);
    let ll = by_mode(ArrivalMode::Ll);
    let ss = by_mode(ArrivalMode::Ss);
    let ls = by_mode(ArrivalMode::Ls);
    if ssl.len() < 2 {
        return Err(CalError::Fit(format!(
            "need at least 2 SSL picks, got {}",
            ssl.len()
        )));
    }
    if saw.len() < 2 {
        return Err(CalError::Fit(format!(
            "need at least 2 SAW picks, got {}",
            saw.len()
        )));
    }
    if ll.is_empty() && ss.is_empty() {
        return Err(CalError::Fit("need at least one LL or SS pick".into()));
    }

    // Stage 1: longitudinal speed from SSL.
    let c_l = through_origin_slope(&ssl)
        .ok_or_else(|| CalError::Fit("SSL picks do not determine a positive speed".into()))?;

    // Stage 2: Rayleigh speed from SAW, inverted for the shear speed.
    let c_r_fit = through_origin_slope(&saw)
        .ok_or_else(|| CalError::Fit("SAW picks do not determine a positive speed".into()))?;
    if c_r_fit >= c_l {
        return Err(CalError::Fit(format!(
            "fitted Rayleigh speed {c_r_fit} is not below c_L {c_l}"
        )));
    }
    // rayleigh_speed(c_l, ·) grows with c_S over the physical range; bisect
    // for the match. Candidates are capped just above c_L/√2 (the ν = 0
    // limit) so the fit cannot wander into non-physical moduli.
    let mut lo = c_r_fit * (1.0 + 1e-12);
    let mut hi = 0.72 * c_l;
    if rayleigh_speed(c_l, lo)? > c_r_fit || rayleigh_speed(c_l, hi)? < c_r_fit {
        return Err(CalError::Fit(format!(
            "Rayleigh speed {c_r_fit} cannot be produced by a physical c_S below c_L = {c_l}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rayleigh_speed(c_l, mid)? < c_r_fit {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON * c_l {
            break;
        }
    }
    let c_s = 0.5 * (lo + hi);
    if c_s >= c_l {
        return Err(CalError::Fit("non-physical fit: c_S ≥ c_L".into()));
    }

    // Stage 3: thickness from LL and SS separately, then averaged.
    let fit_h = |pairs: &[(f64, f64)], c: f64| -> Option<f64> {
        if pairs.is_empty() {
            return None;
        }
        let t_max = pairs.iter().map(|(_, t)| *t).fold(0.0_f64, f64::max);
        let hi = 0.75 * t_max * c;
        let cost = |h: f64| -> f64 {
            pairs
                .iter()
                .map(|&(d, t)| {
                    let r = t - 2.0 * (h * h + d * d / 4.0).sqrt() / c;
                    r * r
                })
                .sum()
        };
        Some(golden_min(1e-9, hi, 1e-15 * hi, cost))
    };
    let h_ll = fit_h(&ll, c_l);
    let h_ss = fit_h(&ss, c_s);
    let thickness = match (h_ll, h_ss) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => unreachable!("presence checked above"),
    };

    let c_r = rayleigh_speed(c_l, c_s)?;
    let mut residuals = vec![
        (ArrivalMode::Ssl, rms_time_residual(&ssl, |d| d / c_l)),
        (ArrivalMode::Saw, rms_time_residual(&saw, |d| d / c_r)),
    ];
    if !ll.is_empty() {
        residuals.push((
            ArrivalMode::Ll,
            rms_time_residual(&ll, |d| {
                2.0 * (thickness * thickness + d * d / 4.0).sqrt() / c_l
            }),
        ));
    }
    if !ss.is_empty() {
        residuals.push((
            ArrivalMode::Ss,
            rms_time_residual(&ss, |d| {
                2.0 * (thickness * thickness + d * d / 4.0).sqrt() / c_s
            }),
        ));
    }
    let ls_verification = if ls.is_empty() {
        None
    } else {
        Some(rms_time_residual(&ls, |d| {
            predict_arrival(ArrivalMode::Ls, d, c_l, c_s, thickness).expect("valid fit parameters")
        }))
    };

    Ok(BackgroundFit {
        c_l,
        c_s,
        c_r,
        thickness,
        residuals,
        ls_verification,
    })
}

/// Read picks from CSV with columns `mode,source_index,receiver_index,time_s`.
pub fn read_picks_csv(path: &Path, geometry: ArrayGeometry) -> Result<ArrivalPickSet, CalError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut picks = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 0 && trimmed.starts_with("mode")) {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(CalError::PickFile(format!(
                "line {}: expected 4 columns, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let mode = ArrivalMode::parse(fields[0]).ok_or_else(|| {
            CalError::PickFile(format!("line {}: unknown mode {:?}", lineno + 1, fields[0]))
        })?;
        let parse_idx = |s: &str| -> Result<usize, CalError> {
            s.trim()
                .parse()
                .map_err(|_| CalError::PickFile(format!("line {}: bad index {s:?}", lineno + 1)))
        };
        let time: f64 = fields[3].trim().parse().map_err(|_| {
            CalError::PickFile(format!("line {}: bad time {:?}", lineno + 1, fields[3]))
        })?;
        picks.push(ArrivalPick {
            mode,
            source_index: parse_idx(fields[1])?,
            receiver_index: parse_idx(fields[2])?,
            time,
        });
    }
    let set = ArrivalPickSet { picks, geometry };
    set.validate()?;
    Ok(set)
}

/// Write picks in the same CSV layout [`read_picks_csv`] expects.
pub fn write_picks_csv(set: &ArrivalPickSet, path: &Path) -> Result<(), CalError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "mode,source_index,receiver_index,time_s")?;
    for p in &set.picks {
        writeln!(
            w,
            "{},{},{},{:e}",
            p.mode.name(),
            p.source_index,
            p.receiver_index,
            p.time
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
