//! Dictionary of trial scattering signatures over the sampling grid.
//!
//! A signature is the background (defect-free) response at every receiver
//! to an oriented point source at a sampling point, kicked at an
//! activation time t₀. Signatures are stored once at t₀ = 0; other outsets
//! are realized by exact sample shifts, never re-simulated. The frequency
//! form windows the t₀ = 0 signatures and evaluates them on the inversion
//! band.

pub mod io;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataops::filter::Bandpass;
use crate::dataops::spectra::{tukey_window, uniform_band};
use crate::dataops::DataError;
use crate::wavesim::{
    record_probes, record_traces, ArrayGeometry, Backend, Component, MaterialModel2D, Probe,
    SimError, SourceSpec, TimeGrid,
};

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Rectangular grid of sampling points, z-major flattened
/// (`s = iz·n_x + ix`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
    pub n_x: usize,
    pub n_z: usize,
}

impl SamplingGrid {
    pub fn n_points(&self) -> usize {
        self.n_x * self.n_z
    }

    /// Coordinates of flattened point `s`.
    pub fn point(&self, s: usize) -> (f64, f64) {
        let (ix, iz) = (s % self.n_x, s / self.n_x);
        (self.x_at(ix), self.z_at(iz))
    }

    pub fn x_at(&self, ix: usize) -> f64 {
        if self.n_x == 1 {
            self.x0
        } else {
            self.x0 + (self.x1 - self.x0) * ix as f64 / (self.n_x - 1) as f64
        }
    }

    pub fn z_at(&self, iz: usize) -> f64 {
        if self.n_z == 1 {
            self.z0
        } else {
            self.z0 + (self.z1 - self.z0) * iz as f64 / (self.n_z - 1) as f64
        }
    }

    /// Grid pitch (dx, dz); zero along degenerate axes.
    pub fn spacing(&self) -> (f64, f64) {
        let dx = if self.n_x > 1 {
            (self.x1 - self.x0) / (self.n_x - 1) as f64
        } else {
            0.0
        };
        let dz = if self.n_z > 1 {
            (self.z1 - self.z0) / (self.n_z - 1) as f64
        } else {
            0.0
        };
        (dx, dz)
    }

    pub fn validate(&self, model: &MaterialModel2D) -> Result<(), LibraryError> {
        if self.n_points() == 0 {
            return Err(LibraryError::Config("sampling grid is empty".into()));
        }
        if !(self.x1 >= self.x0 && self.z1 >= self.z0) {
            return Err(LibraryError::Config(
                "sampling rectangle has negative extent".into(),
            ));
        }
        let inside = |x: f64, z: f64| {
            x > -model.width / 2.0 && x < model.width / 2.0 && z > 0.0 && z < model.depth
        };
        if !(inside(self.x0, self.z0) && inside(self.x1, self.z1)) {
            return Err(LibraryError::Geometry(
                "sampling rectangle must lie strictly inside the specimen".into(),
            ));
        }
        Ok(())
    }
}

/// Trial-pattern parameters: polarization directions and activation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    /// Number of polarization directions, uniform over [0, π).
    pub n_p: usize,
    /// Activation times t₀, each an integer multiple of the record step.
    pub outsets: Vec<f64>,
}

impl TrialConfig {
    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_p)
            .map(|n| std::f64::consts::PI * n as f64 / self.n_p as f64)
            .collect()
    }

    pub fn n_outsets(&self) -> usize {
        self.outsets.len()
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<(), LibraryError> {
        if self.n_p == 0 {
            return Err(LibraryError::Config("need at least one polarization".into()));
        }
        if self.outsets.is_empty() {
            return Err(LibraryError::Config("need at least one outset".into()));
        }
        for &t0 in &self.outsets {
            if !(0.0..grid.total()).contains(&t0) {
                return Err(LibraryError::Config(format!(
                    "outset {t0} s outside the record window [0, {})",
                    grid.total()
                )));
            }
            let steps = t0 / grid.dt;
            if (steps - steps.round()).abs() > 1e-6 {
                return Err(LibraryError::Config(format!(
                    "outset {t0} s is not an integer multiple of dt = {} s",
                    grid.dt
                )));
            }
        }
        Ok(())
    }

    /// Outset expressed in whole samples.
    pub fn outset_samples(&self, r: usize, dt: f64) -> usize {
        (self.outsets[r] / dt).round() as usize
    }
}

/// How a library was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildMethod {
    /// One background simulation per (sampling point, polarization).
    Direct,
    /// One background simulation per receiver, converted by reciprocity.
    Reciprocal,
}

/// Simulation effort spent building a library.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildStats {
    pub simulations: usize,
    pub method: BuildMethod,
}

/// Stable 64-bit digest of the background model, carried as provenance.
pub fn background_hash(model: &MaterialModel2D) -> u64 {
    let text = serde_json::to_string(model).expect("model serializes");
    let digest = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Time-domain signature library: t₀ = 0 base plus the outset list.
#[derive(Debug, Clone)]
pub struct SignatureLibrary {
    /// Base signatures, pattern-major: `[(s·n_p + n)·n_m + m][t]`.
    base: Vec<f64>,
    pub grid: SamplingGrid,
    pub config: TrialConfig,
    pub array: ArrayGeometry,
    pub time_grid: TimeGrid,
    pub method: BuildMethod,
    pub background_hash: u64,
}

impl SignatureLibrary {
    /// Assemble a library from externally produced t₀ = 0 signatures
    /// (pattern-major `[(s·n_p + n)·n_m + m][t]`), e.g. imported from
    /// another solver. Panics if the buffer does not match the layout.
    pub fn from_raw_parts(
        grid: SamplingGrid,
        n_p: usize,
        outsets: Vec<f64>,
        array: ArrayGeometry,
        time_grid: TimeGrid,
        base: Vec<f64>,
    ) -> SignatureLibrary {
        assert_eq!(
            base.len(),
            grid.n_points() * n_p * array.n_receivers() * time_grid.n_t,
            "signature buffer does not match the library layout"
        );
        SignatureLibrary {
            base,
            grid,
            config: TrialConfig { n_p, outsets },
            array,
            time_grid,
            method: BuildMethod::Direct,
            background_hash: 0,
        }
    }

    pub fn n_m(&self) -> usize {
        self.array.n_receivers()
    }

    pub fn n_t(&self) -> usize {
        self.time_grid.n_t
    }

    /// Trace of the t₀ = 0 signature for sampling point `s`,
    /// polarization `n`, receiver `m`.
    pub fn base_trace(&self, s: usize, n: usize, m: usize) -> &[f64] {
        let k = ((s * self.config.n_p + n) * self.n_m() + m) * self.n_t();
        &self.base[k..k + self.n_t()]
    }

    fn base_trace_mut(&mut self, s: usize, n: usize, m: usize) -> &mut [f64] {
        let n_t = self.n_t();
        let k = ((s * self.config.n_p + n) * self.n_m() + m) * n_t;
        &mut self.base[k..k + n_t]
    }

    /// Signature for outset index `r`, truncated to `n_t` samples and
    /// flattened receiver-major (`[m][t]`). The shift is an exact sample
    /// shift of the base: zeros before t₀.
    pub fn rhs(&self, s: usize, n: usize, r: usize, n_t: usize) -> Vec<f64> {
        let shift = self.config.outset_samples(r, self.time_grid.dt);
        let n_m = self.n_m();
        let mut out = vec![0.0; n_m * n_t];
        for m in 0..n_m {
            let src = self.base_trace(s, n, m);
            let dst = &mut out[m * n_t..(m + 1) * n_t];
            for t in shift..n_t {
                dst[t] = src[t - shift];
            }
        }
        out
    }

    /// Apply a zero-phase band-pass to every base trace.
    pub fn bandpassed(&self, f_lo: f64, f_hi: f64) -> Result<SignatureLibrary, LibraryError> {
        let design = Bandpass::design(f_lo, f_hi, self.time_grid.dt)?;
        let mut out = self.clone();
        let n_t = self.n_t();
        out.base
            .par_chunks_mut(n_t)
            .for_each(|trace| {
                let filtered = design.filtfilt(trace);
                trace.copy_from_slice(&filtered);
            });
        Ok(out)
    }

    /// Uniform scaling of every signature (test hook for scaling laws).
    pub fn scaled(&self, c: f64) -> SignatureLibrary {
        let mut out = self.clone();
        for v in &mut out.base {
            *v *= c;
        }
        out
    }

    /// Restriction to `n_p` polarizations when the counts nest: the
    /// directions of a smaller uniform fan are a stride-subset of a larger
    /// one whenever `n_p` divides the built count.
    pub fn polarization_subset(&self, n_p: usize) -> Option<SignatureLibrary> {
        if n_p == 0 || self.config.n_p % n_p != 0 {
            return None;
        }
        if n_p == self.config.n_p {
            return Some(self.clone());
        }
        let stride = self.config.n_p / n_p;
        let (n_m, n_t) = (self.n_m(), self.n_t());
        let mut base = Vec::with_capacity(self.grid.n_points() * n_p * n_m * n_t);
        for s in 0..self.grid.n_points() {
            for n in 0..n_p {
                for m in 0..n_m {
                    base.extend_from_slice(self.base_trace(s, n * stride, m));
                }
            }
        }
        Some(SignatureLibrary {
            base,
            grid: self.grid.clone(),
            config: TrialConfig {
                n_p,
                outsets: self.config.outsets.clone(),
            },
            array: self.array.clone(),
            time_grid: self.time_grid,
            method: self.method,
            background_hash: self.background_hash,
        })
    }
}

/// Background response at all receivers to a trial source at `z` with
/// polarization angle `theta`, activated at `t0`.
pub fn trial_signature_direct(
    background: &MaterialModel2D,
    z: (f64, f64),
    theta: f64,
    t0: f64,
    array: &ArrayGeometry,
    grid: &TimeGrid,
    backend: Backend,
) -> Result<Vec<Vec<f64>>, LibraryError> {
    if !background.voids.is_empty() {
        return Err(LibraryError::Config(
            "trial signatures are defined on the defect-free background".into(),
        ));
    }
    if !background.contains(z.0, z.1) {
        return Err(LibraryError::Geometry(format!(
            "sampling point ({}, {}) outside the background",
            z.0, z.1
        )));
    }
    let source = SourceSpec::Dipole {
        x: z.0,
        z: z.1,
        angle: theta,
        amplitude: 1.0,
        onset: t0,
    };
    let res = record_traces(background, &source, array, grid, backend)?;
    Ok(res.traces)
}

/// Build the library by direct simulation: one run per (z, p) pair.
pub fn build_time_library(
    background: &MaterialModel2D,
    grid: &SamplingGrid,
    config: &TrialConfig,
    array: &ArrayGeometry,
    time_grid: &TimeGrid,
    backend: Backend,
) -> Result<(SignatureLibrary, BuildStats), LibraryError> {
    validate_build(background, grid, config, array, time_grid)?;
    let angles = config.angles();
    let n_t = time_grid.n_t;
    let n_m = array.n_receivers();
    let jobs: Vec<(usize, usize)> = (0..grid.n_points())
        .flat_map(|s| (0..config.n_p).map(move |n| (s, n)))
        .collect();
    let results: Vec<Vec<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(s, n)| {
            trial_signature_direct(
                background,
                grid.point(s),
                angles[n],
                0.0,
                array,
                time_grid,
                backend,
            )
        })
        .collect::<Result<_, _>>()?;
    let mut lib = empty_library(grid, config, array, time_grid, BuildMethod::Direct, background);
    for (&(s, n), traces) in jobs.iter().zip(&results) {
        for m in 0..n_m {
            lib.base_trace_mut(s, n, m).copy_from_slice(&traces[m][..n_t]);
        }
    }
    Ok((
        lib,
        BuildStats {
            simulations: jobs.len(),
            method: BuildMethod::Direct,
        },
    ))
}

/// Build the library by reciprocity: one background simulation per
/// receiver, with the trial response read off at the sampling points.
///
/// Cost is exactly `N_m` simulations regardless of the grid and
/// polarization count. The discrete schemes are self-adjoint, so the
/// result matches the direct path to round-off.
pub fn build_library_reciprocal(
    background: &MaterialModel2D,
    grid: &SamplingGrid,
    config: &TrialConfig,
    array: &ArrayGeometry,
    time_grid: &TimeGrid,
    backend: Backend,
) -> Result<(SignatureLibrary, BuildStats), LibraryError> {
    validate_build(background, grid, config, array, time_grid)?;
    let angles = config.angles();
    let n_t = time_grid.n_t;
    let n_z = grid.n_points();

    // Probe layout per receiver simulation.
    let probes: Vec<Probe> = match backend {
        Backend::Elastic => (0..n_z)
            .flat_map(|s| {
                let (x, z) = grid.point(s);
                [
                    Probe {
                        x,
                        z,
                        component: Component::Horizontal,
                    },
                    Probe {
                        x,
                        z,
                        component: Component::Vertical,
                    },
                ]
            })
            .collect(),
        Backend::Scalar => {
            let arm = 0.5 * background.cell_size;
            (0..n_z)
                .flat_map(|s| {
                    let (x, z) = grid.point(s);
                    angles.iter().flat_map(move |&th| {
                        let (px, pz) = (th.cos(), th.sin());
                        [
                            Probe {
                                x: x + arm * px,
                                z: z + arm * pz,
                                component: Component::Field,
                            },
                            Probe {
                                x: x - arm * px,
                                z: z - arm * pz,
                                component: Component::Field,
                            },
                        ]
                    })
                })
                .collect()
        }
    };

    // The reciprocal source is the receiver-side recording functional: a
    // vertical impulse (elastic) or monopole kick (scalar) at the receiver.
    let per_receiver: Vec<Vec<Vec<f64>>> = (0..array.n_receivers())
        .into_par_iter()
        .map(|m| {
            let source = SourceSpec::Impulse {
                x: array.receivers[m],
                z: 0.0,
                amplitude: 1.0,
                onset: 0.0,
            };
            record_probes(background, &source, &probes, time_grid, backend).map(|r| r.traces)
        })
        .collect::<Result<_, _>>()?;

    let mut lib = empty_library(
        grid,
        config,
        array,
        time_grid,
        BuildMethod::Reciprocal,
        background,
    );
    let h = background.cell_size;
    for m in 0..array.n_receivers() {
        let traces = &per_receiver[m];
        for s in 0..n_z {
            for (n, &th) in angles.iter().enumerate() {
                let dst = lib.base_trace_mut(s, n, m);
                match backend {
                    Backend::Elastic => {
                        let ux = &traces[2 * s];
                        let uz = &traces[2 * s + 1];
                        let (px, pz) = (th.cos(), th.sin());
                        for t in 0..n_t {
                            dst[t] = px * ux[t] + pz * uz[t];
                        }
                    }
                    Backend::Scalar => {
                        let plus = &traces[(s * angles.len() + n) * 2];
                        let minus = &traces[(s * angles.len() + n) * 2 + 1];
                        for t in 0..n_t {
                            dst[t] = (plus[t] - minus[t]) / h;
                        }
                    }
                }
            }
        }
    }
    Ok((
        lib,
        BuildStats {
            simulations: array.n_receivers(),
            method: BuildMethod::Reciprocal,
        },
    ))
}

fn validate_build(
    background: &MaterialModel2D,
    grid: &SamplingGrid,
    config: &TrialConfig,
    array: &ArrayGeometry,
    time_grid: &TimeGrid,
) -> Result<(), LibraryError> {
    if !background.voids.is_empty() {
        return Err(LibraryError::Config(
            "the library background must be defect-free".into(),
        ));
    }
    array.validate()?;
    grid.validate(background)?;
    config.validate(time_grid)
}

fn empty_library(
    grid: &SamplingGrid,
    config: &TrialConfig,
    array: &ArrayGeometry,
    time_grid: &TimeGrid,
    method: BuildMethod,
    background: &MaterialModel2D,
) -> SignatureLibrary {
    SignatureLibrary {
        base: vec![0.0; grid.n_points() * config.n_p * array.n_receivers() * time_grid.n_t],
        grid: grid.clone(),
        config: config.clone(),
        array: array.clone(),
        time_grid: *time_grid,
        method,
        background_hash: background_hash(background),
    }
}

/// Frequency-form library: the matrix Φ̂ with rows stacked κ-major
/// (`row = κ·N_m + m`) and one column per (z, p) pair (`ℓ = s·N_p + n`),
/// stored column-major.
#[derive(Debug, Clone)]
pub struct FreqLibrary {
    columns: Vec<Complex64>,
    pub n_m: usize,
    pub n_p: usize,
    pub freqs: Vec<f64>,
    pub tukey_factor: f64,
    pub grid: SamplingGrid,
    pub array: ArrayGeometry,
    /// Time window the transform was taken over.
    pub n_t: usize,
    pub dt: f64,
    pub background_hash: u64,
}

impl FreqLibrary {
    pub fn n_rows(&self) -> usize {
        self.freqs.len() * self.n_m
    }

    pub fn n_cols(&self) -> usize {
        self.grid.n_points() * self.n_p
    }

    /// Column ℓ = s·N_p + n as a contiguous rhs vector.
    pub fn column(&self, l: usize) -> &[Complex64] {
        let rows = self.n_rows();
        &self.columns[l * rows..(l + 1) * rows]
    }
}

/// Assemble the frequency library from the t₀ = 0 time signatures:
/// Tukey window, then direct transform onto `n_omega` band frequencies.
pub fn build_freq_library(
    lib: &SignatureLibrary,
    band: (f64, f64),
    n_omega: usize,
    tukey_factor: f64,
    n_t: usize,
) -> Result<FreqLibrary, LibraryError> {
    if n_omega < 1 {
        return Err(LibraryError::Config("n_omega must be at least 1".into()));
    }
    if n_t == 0 || n_t > lib.n_t() {
        return Err(LibraryError::Config(format!(
            "transform window {n_t} outside the library record of {} samples",
            lib.n_t()
        )));
    }
    let dt = lib.time_grid.dt;
    let nyquist = 0.5 / dt;
    if !(0.0 < band.0 && band.0 < band.1 && band.1 < nyquist) {
        return Err(LibraryError::Data(DataError::Band(format!(
            "band [{}, {}] Hz outside (0, {nyquist})",
            band.0, band.1
        ))));
    }
    let freqs = uniform_band(band.0, band.1, n_omega);
    let window = tukey_window(n_t, tukey_factor);
    let n_m = lib.n_m();
    let n_cols = lib.grid.n_points() * lib.config.n_p;
    let rows = n_omega * n_m;

    let steps: Vec<Complex64> = freqs
        .iter()
        .map(|f| Complex64::new(0.0, -2.0 * std::f64::consts::PI * f * dt).exp())
        .collect();

    let mut columns = vec![Complex64::new(0.0, 0.0); n_cols * rows];
    columns
        .par_chunks_mut(rows)
        .enumerate()
        .for_each(|(l, col)| {
            let (s, n) = (l / lib.config.n_p, l % lib.config.n_p);
            for m in 0..n_m {
                let trace = lib.base_trace(s, n, m);
                for (k, step) in steps.iter().enumerate() {
                    let mut phase = *step;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for t in 0..n_t {
                        acc += window[t] * trace[t] * phase;
                        phase *= step;
                    }
                    // Row layout of the stacked multifrequency system.
                    col[k * n_m + m] = acc * dt;
                }
            }
        });

    Ok(FreqLibrary {
        columns,
        n_m,
        n_p: lib.config.n_p,
        freqs,
        tukey_factor,
        grid: lib.grid.clone(),
        array: lib.array.clone(),
        n_t,
        dt,
        background_hash: lib.background_hash,
    })
}
