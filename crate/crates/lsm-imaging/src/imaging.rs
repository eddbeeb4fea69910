//! Image metrics and rendering for indicator maps.

use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::inversion::IndicatorMap;
use crate::triallib::SamplingGrid;
use crate::wavesim::CircularVoid;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("mask error: {0}")]
    Mask(String),
    #[error("degenerate background: {0}")]
    DegenerateBackground(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Cell partition used by the contrast metric: a defect neighborhood, the
/// background, and an ignored gap annulus between them.
#[derive(Debug, Clone)]
pub struct RegionMask {
    pub defect: Vec<usize>,
    pub background: Vec<usize>,
    pub grid: SamplingGrid,
}

impl RegionMask {
    pub fn validate(&self) -> Result<(), ImageError> {
        let n = self.grid.n_points();
        if self.defect.is_empty() || self.background.is_empty() {
            return Err(ImageError::Mask(
                "defect and background regions must both be nonempty".into(),
            ));
        }
        if self.defect.iter().chain(&self.background).any(|&k| k >= n) {
            return Err(ImageError::Mask("mask cell outside the grid".into()));
        }
        if self.defect.iter().any(|k| self.background.contains(k)) {
            return Err(ImageError::Mask(
                "defect and background regions overlap".into(),
            ));
        }
        Ok(())
    }
}

/// Defect neighborhood = cells within `radius + dilation` of a defect
/// center; background = cells farther than `radius + dilation + gap`. The
/// annulus in between belongs to neither region.
pub fn make_disk_masks(
    grid: &SamplingGrid,
    defects: &[CircularVoid],
    dilation: f64,
    gap: f64,
) -> Result<RegionMask, ImageError> {
    if defects.is_empty() {
        return Err(ImageError::Mask("no defects to build a mask around".into()));
    }
    if dilation < 0.0 || gap < 0.0 {
        return Err(ImageError::Parameter(
            "dilation and gap must be nonnegative".into(),
        ));
    }
    let mut defect = Vec::new();
    let mut background = Vec::new();
    for s in 0..grid.n_points() {
        let (x, z) = grid.point(s);
        let mut in_defect = false;
        let mut in_gap = false;
        for d in defects {
            let dist = ((x - d.x).powi(2) + (z - d.z).powi(2)).sqrt();
            if dist <= d.radius + dilation {
                in_defect = true;
                break;
            }
            if dist <= d.radius + dilation + gap {
                in_gap = true;
            }
        }
        if in_defect {
            defect.push(s);
        } else if !in_gap {
            background.push(s);
        }
    }
    let mask = RegionMask {
        defect,
        background,
        grid: grid.clone(),
    };
    if mask.background.is_empty() {
        return Err(ImageError::Mask(
            "dilation and gap swallowed the whole background".into(),
        ));
    }
    mask.validate()?;
    Ok(mask)
}

/// Maximum indicator value over the defect neighborhood divided by the RMS
/// of the background values.
pub fn contrast_metric(map: &IndicatorMap, mask: &RegionMask) -> Result<f64, ImageError> {
    mask.validate()?;
    if mask.grid != map.grid {
        return Err(ImageError::Mask(
            "mask was built for a different sampling grid".into(),
        ));
    }
    let peak = mask
        .defect
        .iter()
        .map(|&k| map.values[k])
        .fold(f64::MIN, f64::max);
    let ms = mask
        .background
        .iter()
        .map(|&k| map.values[k] * map.values[k])
        .sum::<f64>()
        / mask.background.len() as f64;
    let rms = ms.sqrt();
    if rms == 0.0 {
        return Err(ImageError::DegenerateBackground(
            "background RMS is zero; the ratio is undefined".into(),
        ));
    }
    Ok(peak / rms)
}

/// Binary map: cell retained iff its value exceeds `fraction` of the map
/// maximum.
#[derive(Debug, Clone)]
pub struct BinaryMap {
    pub grid: SamplingGrid,
    pub keep: Vec<bool>,
    /// True when the source map had no positive values.
    pub degenerate: bool,
}

pub fn threshold_map(map: &IndicatorMap, fraction: f64) -> Result<BinaryMap, ImageError> {
    if !(0.0 < fraction && fraction < 1.0) {
        return Err(ImageError::Parameter(format!(
            "threshold fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let max = map.values.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Ok(BinaryMap {
            grid: map.grid.clone(),
            keep: vec![false; map.values.len()],
            degenerate: true,
        });
    }
    Ok(BinaryMap {
        grid: map.grid.clone(),
        keep: map.values.iter().map(|&v| v > fraction * max).collect(),
        degenerate: false,
    })
}

/// Write a 16-bit binary portable graymap (P5) of the normalized map.
///
/// The minimum cell renders to 0 and the maximum to 65535; bytes are
/// deterministic for identical inputs.
pub fn render_map(map: &IndicatorMap, path: &Path) -> Result<(), ImageError> {
    let (lo, hi) = map
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    render_p5(
        &map.values,
        map.grid.n_x,
        map.grid.n_z,
        |v| {
            if span > 0.0 {
                (((v - lo) / span) * 65535.0).round() as u16
            } else {
                0
            }
        },
        path,
    )
}

/// Render a thresholded map: retained cells white, dropped cells black.
pub fn render_binary(map: &BinaryMap, path: &Path) -> Result<(), ImageError> {
    let values: Vec<f64> = map.keep.iter().map(|&k| k as u8 as f64).collect();
    render_p5(
        &values,
        map.grid.n_x,
        map.grid.n_z,
        |v| if v > 0.0 { 65535 } else { 0 },
        path,
    )
}

fn render_p5(
    values: &[f64],
    width: usize,
    height: usize,
    shade: impl Fn(f64) -> u16,
    path: &Path,
) -> Result<(), ImageError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write!(w, "P5\n{width} {height}\n65535\n")?;
    for &v in values {
        // Big-endian samples per the format.
        w.write_all(&shade(v).to_be_bytes())?;
    }
    Ok(())
}
