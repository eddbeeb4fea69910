//! Near-field operators assembled from scattered data.
//!
//! Time domain: the map [N g](x_m, t_k) = Σᵢ Σ_{j<k} v(x_m, t_{k−j}; yᵢ)
//! g(yᵢ, t_j) — a lower-block-triangular block-Toeplitz matrix applied via
//! zero-padded FFT convolution against cached kernel spectra. Frequency
//! domain: one dense N_m × N_i block per frequency, block-diagonal in the
//! stacked multifrequency layout.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::InvError;
use crate::dataops::{SpectrumBlock, WaveformBlock};
use crate::wavesim::ArrayGeometry;

/// Mean pitch of a strictly increasing position list; 1 for a single point.
pub(crate) fn pitch(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        1.0
    } else {
        (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64
    }
}

pub struct NearFieldOperatorTime {
    n_m: usize,
    n_i: usize,
    n_t: usize,
    dt: f64,
    /// Source pitch Δy (solution-space quadrature).
    pub src_spacing: f64,
    /// Receiver pitch Δx (data-space quadrature).
    pub obs_spacing: f64,
    /// Kernels v(x_m, ·; y_i), truncated to n_t samples, (m·n_i + i)-major.
    kernels: Vec<f64>,
    /// FFT of each zero-padded kernel.
    kernel_spectra: Vec<Vec<Complex64>>,
    fft_len: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    pub array: ArrayGeometry,
}

impl NearFieldOperatorTime {
    /// Assemble from a scattered block, truncating every trace to the
    /// leading `n_t` samples (the reconstruction period selection).
    pub fn new(block: &WaveformBlock, n_t: usize) -> Result<NearFieldOperatorTime, InvError> {
        if n_t == 0 || n_t > block.n_t() {
            return Err(InvError::Dimension(format!(
                "operator window {n_t} outside the dataset record of {} samples",
                block.n_t()
            )));
        }
        let (n_m, n_i) = (block.n_m(), block.n_i());
        let fft_len = (2 * n_t).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(fft_len);
        let ifft = planner.plan_fft_inverse(fft_len);

        let mut kernels = vec![0.0; n_m * n_i * n_t];
        let mut kernel_spectra = Vec::with_capacity(n_m * n_i);
        let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
        for m in 0..n_m {
            for i in 0..n_i {
                let tr = &block.trace(m, i)[..n_t];
                kernels[(m * n_i + i) * n_t..(m * n_i + i + 1) * n_t].copy_from_slice(tr);
                for v in buf.iter_mut() {
                    *v = Complex64::new(0.0, 0.0);
                }
                for (k, &v) in tr.iter().enumerate() {
                    buf[k].re = v;
                }
                fft.process(&mut buf);
                kernel_spectra.push(buf.clone());
            }
        }
        Ok(NearFieldOperatorTime {
            n_m,
            n_i,
            n_t,
            dt: block.grid.dt,
            src_spacing: pitch(&block.array.sources),
            obs_spacing: pitch(&block.array.receivers),
            kernels,
            kernel_spectra,
            fft_len,
            fft,
            ifft,
            array: block.array.clone(),
        })
    }

    pub fn n_m(&self) -> usize {
        self.n_m
    }

    pub fn n_i(&self) -> usize {
        self.n_i
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Rows (data dimension) of the flattened matrix.
    pub fn rows(&self) -> usize {
        self.n_m * self.n_t
    }

    /// Columns (density dimension) of the flattened matrix.
    pub fn cols(&self) -> usize {
        self.n_i * self.n_t
    }

    fn kernel(&self, m: usize, i: usize) -> &[f64] {
        &self.kernels[(m * self.n_i + i) * self.n_t..(m * self.n_i + i + 1) * self.n_t]
    }

    /// The plain discretized sum: out[m][k] = Σᵢ Σ_{j<k} v[m,i][k−j]·g[i][j]
    /// with the strict one-step delay, computed by FFT convolution.
    ///
    /// `g` is i-major `[n_i][n_t]`; the result is m-major `[n_m][n_t]`.
    pub fn apply(&self, g: &[f64]) -> Result<Vec<f64>, InvError> {
        if g.len() != self.cols() {
            return Err(InvError::Dimension(format!(
                "density has {} entries, operator expects {}",
                g.len(),
                self.cols()
            )));
        }
        let l = self.fft_len;
        // Forward transforms of every source trace of g.
        let mut g_spec = vec![Complex64::new(0.0, 0.0); self.n_i * l];
        for i in 0..self.n_i {
            let buf = &mut g_spec[i * l..(i + 1) * l];
            for (k, &v) in g[i * self.n_t..(i + 1) * self.n_t].iter().enumerate() {
                buf[k].re = v;
            }
            self.fft.process(buf);
        }
        let mut out = vec![0.0; self.rows()];
        let mut acc = vec![Complex64::new(0.0, 0.0); l];
        for m in 0..self.n_m {
            for v in acc.iter_mut() {
                *v = Complex64::new(0.0, 0.0);
            }
            for i in 0..self.n_i {
                let ks = &self.kernel_spectra[m * self.n_i + i];
                let gs = &g_spec[i * l..(i + 1) * l];
                for ((a, k), g) in acc.iter_mut().zip(ks).zip(gs) {
                    *a += k * g;
                }
            }
            self.ifft.process(&mut acc);
            let scale = 1.0 / l as f64;
            // out[a] = (v ⊛ g)[a−1]; the first output sample is empty.
            let dst = &mut out[m * self.n_t..(m + 1) * self.n_t];
            for a in 1..self.n_t {
                dst[a] = acc[a - 1].re * scale;
            }
        }
        Ok(out)
    }

    /// Adjoint under the weighted inner products (Δx·dt on data, Δy·dt on
    /// densities): time-reversed correlation scaled by Δx/Δy.
    pub fn apply_adjoint(&self, r: &[f64]) -> Result<Vec<f64>, InvError> {
        let raw = self.apply_adjoint_raw(r)?;
        let w = self.obs_spacing / self.src_spacing;
        Ok(raw.into_iter().map(|v| v * w).collect())
    }

    /// Plain transpose of [`Self::apply`].
    pub(crate) fn apply_adjoint_raw(&self, r: &[f64]) -> Result<Vec<f64>, InvError> {
        if r.len() != self.rows() {
            return Err(InvError::Dimension(format!(
                "residual has {} entries, operator expects {}",
                r.len(),
                self.rows()
            )));
        }
        let l = self.fft_len;
        let mut r_spec = vec![Complex64::new(0.0, 0.0); self.n_m * l];
        for m in 0..self.n_m {
            let buf = &mut r_spec[m * l..(m + 1) * l];
            for (k, &v) in r[m * self.n_t..(m + 1) * self.n_t].iter().enumerate() {
                buf[k].re = v;
            }
            self.fft.process(buf);
        }
        let mut out = vec![0.0; self.cols()];
        let mut acc = vec![Complex64::new(0.0, 0.0); l];
        for i in 0..self.n_i {
            for v in acc.iter_mut() {
                *v = Complex64::new(0.0, 0.0);
            }
            for m in 0..self.n_m {
                let ks = &self.kernel_spectra[m * self.n_i + i];
                let rs = &r_spec[m * l..(m + 1) * l];
                for ((a, k), r) in acc.iter_mut().zip(ks).zip(rs) {
                    *a += k.conj() * r;
                }
            }
            self.ifft.process(&mut acc);
            let scale = 1.0 / l as f64;
            // (Nᵀr)[b] = Σ_a v[a−1−b]·r[a] = corr[b+1].
            let dst = &mut out[i * self.n_t..(i + 1) * self.n_t];
            for b in 0..self.n_t - 1 {
                dst[b] = acc[b + 1].re * scale;
            }
        }
        Ok(out)
    }

    /// Scalar mapping the plain sum onto the quadrature-consistent,
    /// norm-transformed matrix the solvers factor: dt·√(Δx·Δy).
    pub(crate) fn solver_scale(&self) -> f64 {
        self.dt * (self.obs_spacing * self.src_spacing).sqrt()
    }

    /// Frobenius norm of the transformed matrix, for scale-relative
    /// bounds. Kernel sample v[τ] appears n_t−1−τ times.
    pub fn norm_frobenius(&self) -> f64 {
        let mut total = 0.0;
        for mi in 0..self.n_m * self.n_i {
            let tr = &self.kernels[mi * self.n_t..(mi + 1) * self.n_t];
            for (tau, &v) in tr.iter().enumerate() {
                let count = (self.n_t - 1).saturating_sub(tau);
                total += count as f64 * v * v;
            }
        }
        self.solver_scale() * total.sqrt()
    }

    /// Materialize the transformed matrix (dense-SVD mode).
    pub(crate) fn dense_matrix(&self) -> DMatrix<f64> {
        let s0 = self.solver_scale();
        let mut a = DMatrix::zeros(self.rows(), self.cols());
        for m in 0..self.n_m {
            for i in 0..self.n_i {
                let tr = self.kernel(m, i);
                for kk in 1..self.n_t {
                    for b in 0..kk {
                        a[(m * self.n_t + kk, i * self.n_t + b)] = s0 * tr[kk - 1 - b];
                    }
                }
            }
        }
        a
    }
}

/// Frequency-domain operator: raw blocks N̂_κ(m, i) = v̂(x_m, ω_κ; y_i).
pub struct NearFieldOperatorFreq {
    pub blocks: Vec<DMatrix<Complex64>>,
    pub freqs: Vec<f64>,
    pub n_m: usize,
    pub n_i: usize,
    pub src_spacing: f64,
    pub obs_spacing: f64,
}

impl NearFieldOperatorFreq {
    pub fn new(
        spectra: &SpectrumBlock,
        array: &ArrayGeometry,
    ) -> Result<NearFieldOperatorFreq, InvError> {
        if spectra.n_m != array.n_receivers() || spectra.n_i != array.n_sources() {
            return Err(InvError::Dimension(
                "spectrum block disagrees with the array geometry".into(),
            ));
        }
        let blocks = (0..spectra.n_omega())
            .map(|k| {
                DMatrix::from_fn(spectra.n_m, spectra.n_i, |m, i| spectra.at(m, i, k))
            })
            .collect();
        Ok(NearFieldOperatorFreq {
            blocks,
            freqs: spectra.freqs.clone(),
            n_m: spectra.n_m,
            n_i: spectra.n_i,
            src_spacing: pitch(&array.sources),
            obs_spacing: pitch(&array.receivers),
        })
    }

    pub fn n_omega(&self) -> usize {
        self.freqs.len()
    }

    /// Rows of the stacked matrix (κ-major, m-minor).
    pub fn rows(&self) -> usize {
        self.n_omega() * self.n_m
    }

    pub(crate) fn solver_scale(&self) -> f64 {
        (self.obs_spacing * self.src_spacing).sqrt()
    }
}
