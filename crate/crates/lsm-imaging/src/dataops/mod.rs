//! Waveform dataset model: scattered-field computation, band-pass
//! filtering, windowed spectra, synthetic noise, and file I/O.
//!
//! A [`WaveformBlock`] holds the three-index record u(x_m, t_k; y_i) that
//! the rest of the pipeline consumes, in m-major, i-middle, t-minor order.

pub mod filter;
pub mod io;
pub mod spectra;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::wavesim::{ArrayGeometry, TimeGrid};

pub use filter::bandpass;
pub use spectra::{spectra, tukey_window, uniform_band};

/// Data-layer failure modes.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("band error: {0}")]
    Band(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What a block's samples represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Free,
    Total,
    Scattered,
    TrialSignature,
}

impl BlockKind {
    pub(crate) fn code(self) -> u32 {
        match self {
            BlockKind::Free => 0,
            BlockKind::Total => 1,
            BlockKind::Scattered => 2,
            BlockKind::TrialSignature => 3,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<BlockKind> {
        Some(match code {
            0 => BlockKind::Free,
            1 => BlockKind::Total,
            2 => BlockKind::Scattered,
            3 => BlockKind::TrialSignature,
            _ => return None,
        })
    }
}

/// Real waveforms u(x_m, t_k; y_i), stored m-major, i-middle, t-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformBlock {
    pub values: Vec<f64>,
    pub array: ArrayGeometry,
    pub grid: TimeGrid,
    pub kind: BlockKind,
}

impl WaveformBlock {
    /// All-zero block for the given sensing layout.
    pub fn zeros(array: ArrayGeometry, grid: TimeGrid, kind: BlockKind) -> WaveformBlock {
        let n = array.n_receivers() * array.n_sources() * grid.n_t;
        WaveformBlock {
            values: vec![0.0; n],
            array,
            grid,
            kind,
        }
    }

    pub fn n_m(&self) -> usize {
        self.array.n_receivers()
    }

    pub fn n_i(&self) -> usize {
        self.array.n_sources()
    }

    pub fn n_t(&self) -> usize {
        self.grid.n_t
    }

    #[inline]
    pub fn idx(&self, m: usize, i: usize, t: usize) -> usize {
        (m * self.n_i() + i) * self.n_t() + t
    }

    /// The trace recorded at receiver `m` for source `i`.
    pub fn trace(&self, m: usize, i: usize) -> &[f64] {
        let k = self.idx(m, i, 0);
        &self.values[k..k + self.n_t()]
    }

    pub fn trace_mut(&mut self, m: usize, i: usize) -> &mut [f64] {
        let k = self.idx(m, i, 0);
        let n_t = self.n_t();
        &mut self.values[k..k + n_t]
    }

    /// Root-mean-square over every sample of the block.
    pub fn rms(&self) -> f64 {
        rms(&self.values)
    }

    /// Consistency of the value buffer with array and grid, and finiteness.
    pub fn validate(&self) -> Result<(), DataError> {
        let want = self.n_m() * self.n_i() * self.n_t();
        if self.values.len() != want {
            return Err(DataError::Dimension(format!(
                "value buffer holds {} samples, layout needs {want}",
                self.values.len()
            )));
        }
        if let Some(bad) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(DataError::Dimension(format!(
                "non-finite sample {bad} in block"
            )));
        }
        Ok(())
    }

    fn same_layout(&self, other: &WaveformBlock) -> Result<(), DataError> {
        if self.array != other.array || self.grid != other.grid {
            return Err(DataError::Dimension(
                "blocks disagree on array geometry or time grid".into(),
            ));
        }
        Ok(())
    }

    /// Copy with time truncated to the first `n_t` samples.
    pub fn truncated(&self, n_t: usize) -> Result<WaveformBlock, DataError> {
        if n_t == 0 || n_t > self.n_t() {
            return Err(DataError::Parameter(format!(
                "cannot truncate {}-sample traces to {n_t}",
                self.n_t()
            )));
        }
        let mut out = WaveformBlock::zeros(
            self.array.clone(),
            TimeGrid {
                dt: self.grid.dt,
                n_t,
            },
            self.kind,
        );
        for m in 0..self.n_m() {
            for i in 0..self.n_i() {
                let src = self.trace(m, i);
                out.trace_mut(m, i).copy_from_slice(&src[..n_t]);
            }
        }
        Ok(out)
    }
}

/// Complex band spectra v̂(x_m, ω_κ; y_i), stored m-major, i-middle, κ-minor.
#[derive(Debug, Clone)]
pub struct SpectrumBlock {
    pub values: Vec<Complex64>,
    pub n_m: usize,
    pub n_i: usize,
    /// Extracted frequencies, Hz, strictly increasing.
    pub freqs: Vec<f64>,
    /// Cosine fraction of the Tukey window that was applied.
    pub tukey_factor: f64,
}

impl SpectrumBlock {
    pub fn n_omega(&self) -> usize {
        self.freqs.len()
    }

    #[inline]
    pub fn idx(&self, m: usize, i: usize, k: usize) -> usize {
        (m * self.n_i + i) * self.freqs.len() + k
    }

    pub fn at(&self, m: usize, i: usize, k: usize) -> Complex64 {
        self.values[self.idx(m, i, k)]
    }
}

/// v = u^t − u^f, elementwise.
pub fn scattered_field(
    total: &WaveformBlock,
    free: &WaveformBlock,
) -> Result<WaveformBlock, DataError> {
    total.same_layout(free)?;
    let mut out = total.clone();
    out.kind = BlockKind::Scattered;
    for (o, f) in out.values.iter_mut().zip(&free.values) {
        *o -= f;
    }
    Ok(out)
}

/// Add zero-mean white Gaussian noise with standard deviation
/// `relative_level × rms(block)`; deterministic for a given seed.
pub fn add_noise(
    block: &WaveformBlock,
    relative_level: f64,
    seed: u64,
) -> Result<WaveformBlock, DataError> {
    if relative_level < 0.0 {
        return Err(DataError::Parameter(format!(
            "noise level must be ≥ 0, got {relative_level}"
        )));
    }
    if relative_level == 0.0 {
        return Ok(block.clone());
    }
    let sigma = relative_level * block.rms();
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = block.clone();
    for v in &mut out.values {
        *v += normal.sample(&mut rng);
    }
    Ok(out)
}

/// Root-mean-square of a sample buffer.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_with(n_m: usize, n_i: usize, n_t: usize, f: impl Fn(usize) -> f64) -> WaveformBlock {
        let array = ArrayGeometry::colocated(0.0, 1e-3, n_m.max(n_i));
        let array = ArrayGeometry {
            receivers: array.receivers[..n_m].to_vec(),
            sources: array.sources[..n_i].to_vec(),
        };
        let grid = TimeGrid::new(5e-9, n_t).unwrap();
        let mut b = WaveformBlock::zeros(array, grid, BlockKind::Total);
        for (k, v) in b.values.iter_mut().enumerate() {
            *v = f(k);
        }
        b
    }

    #[test]
    fn scattered_of_identical_blocks_is_zero() {
        let total = block_with(3, 2, 16, |k| (k as f64).sin());
        let mut free = total.clone();
        free.kind = BlockKind::Free;
        let v = scattered_field(&total, &free).unwrap();
        assert_eq!(v.kind, BlockKind::Scattered);
        assert!(v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn scattered_subtracts_constant_offset() {
        let free = block_with(2, 2, 8, |k| k as f64);
        let mut total = free.clone();
        for v in &mut total.values {
            *v += 3.25;
        }
        let v = scattered_field(&total, &free).unwrap();
        assert!(v.values.iter().all(|&x| x == 3.25));
    }

    #[test]
    fn scattered_matches_elementwise_oracle() {
        let a = block_with(2, 2, 4, |k| ((k * 7919) % 101) as f64 / 13.0);
        let b = block_with(2, 2, 4, |k| ((k * 104729) % 89) as f64 / 7.0);
        let v = scattered_field(&a, &b).unwrap();
        for m in 0..2 {
            for i in 0..2 {
                for t in 0..4 {
                    let want = a.values[a.idx(m, i, t)] - b.values[b.idx(m, i, t)];
                    assert_eq!(v.values[v.idx(m, i, t)], want);
                }
            }
        }
        // And the defining identity scattered + free = total, to rounding
        // of the intermediates.
        for k in 0..v.values.len() {
            let got = v.values[k] + b.values[k];
            let want = a.values[k];
            let scale = v.values[k].abs() + b.values[k].abs();
            assert!(
                (got - want).abs() <= scale * f64::EPSILON,
                "roundtrip {got} vs {want}"
            );
        }
    }

    #[test]
    fn scattered_rejects_mismatched_grids() {
        let a = block_with(2, 2, 8, |_| 0.0);
        let b = block_with(2, 2, 9, |_| 0.0);
        assert!(matches!(
            scattered_field(&a, &b),
            Err(DataError::Dimension(_))
        ));
    }

    #[test]
    fn noise_zero_level_is_identity() {
        let a = block_with(2, 2, 32, |k| (k as f64 * 0.1).cos());
        let b = add_noise(&a, 0.0, 42).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn noise_deterministic_per_seed() {
        let a = block_with(2, 2, 64, |k| (k as f64 * 0.1).cos());
        let b1 = add_noise(&a, 0.05, 7).unwrap();
        let b2 = add_noise(&a, 0.05, 7).unwrap();
        let b3 = add_noise(&a, 0.05, 8).unwrap();
        assert_eq!(b1.values, b2.values);
        assert_ne!(b1.values, b3.values);
    }

    #[test]
    fn noise_rms_calibrated() {
        // Unit-RMS block with ≥ 1e5 samples.
        let a = block_with(10, 10, 1024, |k| if k % 2 == 0 { 1.0 } else { -1.0 });
        assert!((a.rms() - 1.0).abs() < 1e-12);
        let noisy = add_noise(&a, 0.1, 1234).unwrap();
        let diff: Vec<f64> = noisy
            .values
            .iter()
            .zip(&a.values)
            .map(|(n, o)| n - o)
            .collect();
        let level = rms(&diff);
        assert!(
            (0.095..=0.105).contains(&level),
            "noise RMS {level} outside calibration band"
        );
    }

    #[test]
    fn truncation_keeps_leading_samples() {
        let a = block_with(2, 2, 16, |k| k as f64);
        let t = a.truncated(10).unwrap();
        assert_eq!(t.n_t(), 10);
        assert_eq!(t.trace(1, 1), &a.trace(1, 1)[..10]);
        assert!(a.truncated(0).is_err());
        assert!(a.truncated(17).is_err());
    }
}
