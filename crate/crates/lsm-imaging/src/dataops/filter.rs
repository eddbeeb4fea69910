//! Zero-phase band-pass filtering: a 2nd-order Butterworth band-pass run
//! forward then backward over each trace.

use num_complex::Complex64;

use super::{DataError, WaveformBlock};

/// Biquad-order Butterworth prototype expanded to a 4th-order band-pass.
#[derive(Debug, Clone)]
pub struct Bandpass {
    b: [f64; 5],
    a: [f64; 5],
}

impl Bandpass {
    /// Design for the band `[f_lo, f_hi]` Hz at sample step `dt`.
    pub fn design(f_lo: f64, f_hi: f64, dt: f64) -> Result<Bandpass, DataError> {
        let nyquist = 0.5 / dt;
        if !(0.0 < f_lo && f_lo < f_hi && f_hi < nyquist) {
            return Err(DataError::Band(format!(
                "band [{f_lo}, {f_hi}] Hz must satisfy 0 < f_lo < f_hi < Nyquist = {nyquist} Hz"
            )));
        }
        // Pre-warped analog edges for the bilinear transform.
        let warp = |f: f64| 2.0 / dt * (std::f64::consts::PI * f * dt).tan();
        let (w1, w2) = (warp(f_lo), warp(f_hi));
        let bw = w2 - w1;
        let w0sq = w1 * w2;

        // 2nd-order Butterworth prototype poles.
        let proto = [
            Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
            Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
        ];
        // Low-pass → band-pass: each prototype pole splits in two.
        let mut analog_poles = Vec::with_capacity(4);
        for p in proto {
            let bp = p * bw;
            let disc = (bp * bp - 4.0 * w0sq).sqrt();
            analog_poles.push((bp + disc) / 2.0);
            analog_poles.push((bp - disc) / 2.0);
        }
        // Bilinear transform to digital poles.
        let two_over_dt = 2.0 / dt;
        let digital: Vec<Complex64> = analog_poles
            .iter()
            .map(|s| (two_over_dt + s) / (two_over_dt - s))
            .collect();

        // Denominator from the pole polynomial; numerator zeros are double
        // at z = ±1: (1 - z⁻²)².
        let a_c = poly_from_roots(&digital);
        let mut a = [0.0; 5];
        for (k, c) in a_c.iter().enumerate() {
            a[k] = c.re;
        }
        let mut b = [1.0, 0.0, -2.0, 0.0, 1.0];

        // Unit gain at the analog center frequency mapped through the
        // bilinear transform.
        let theta0 = 2.0 * (w0sq.sqrt() / two_over_dt).atan();
        let h = eval_ratio(&b, &a, theta0);
        let g = h.norm();
        for v in &mut b {
            *v /= g;
        }
        Ok(Bandpass { b, a })
    }

    /// Single forward pass (direct form II transposed).
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let (b, a) = (&self.b, &self.a);
        let mut w = [0.0_f64; 4];
        let mut y = Vec::with_capacity(x.len());
        for &xn in x {
            let yn = b[0] * xn + w[0];
            w[0] = b[1] * xn + w[1] - a[1] * yn;
            w[1] = b[2] * xn + w[2] - a[2] * yn;
            w[2] = b[3] * xn + w[3] - a[3] * yn;
            w[3] = b[4] * xn - a[4] * yn;
            y.push(yn);
        }
        y
    }

    /// Forward-backward (zero-phase) pass with odd edge extension.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = 24.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        for k in (1..=pad).rev() {
            ext.push(2.0 * x[0] - x[k]);
        }
        ext.extend_from_slice(x);
        for k in 1..=pad {
            ext.push(2.0 * x[n - 1] - x[n - 1 - k]);
        }
        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}

fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, v) in c.iter().enumerate() {
            next[k] += v;
            next[k + 1] -= v * r;
        }
        c = next;
    }
    c
}

fn eval_ratio(b: &[f64; 5], a: &[f64; 5], theta: f64) -> Complex64 {
    let z = Complex64::new(0.0, -theta).exp();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    let mut zk = Complex64::new(1.0, 0.0);
    for k in 0..5 {
        num += b[k] * zk;
        den += a[k] * zk;
        zk *= z;
    }
    num / den
}

/// Zero-phase Butterworth band-pass applied to every trace of the block.
pub fn bandpass(block: &WaveformBlock, f_lo: f64, f_hi: f64) -> Result<WaveformBlock, DataError> {
    let design = Bandpass::design(f_lo, f_hi, block.grid.dt)?;
    let mut out = block.clone();
    for m in 0..block.n_m() {
        for i in 0..block.n_i() {
            let filtered = design.filtfilt(block.trace(m, i));
            out.trace_mut(m, i).copy_from_slice(&filtered);
        }
    }
    Ok(out)
}
