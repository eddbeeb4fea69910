//! Run configuration: one TOML file drives the whole pipeline.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::inversion::RegularizationConfig;
use crate::triallib::{SamplingGrid, TrialConfig};
use crate::wavesim::{
    ArrayGeometry, Backend, BoundarySpec, CircularVoid, MaterialModel2D, SourceSpec, TimeGrid,
};

use super::CliError;

fn default_boundaries() -> BoundarySpec {
    BoundarySpec::plate()
}

/// `[material]`: specimen geometry and homogeneous background properties.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterialSection {
    pub width: f64,
    pub depth: f64,
    pub cell_size: f64,
    pub density: f64,
    pub c_l: f64,
    pub c_s: f64,
    #[serde(default)]
    pub voids: Vec<CircularVoid>,
    #[serde(default = "default_boundaries")]
    pub boundaries: BoundarySpec,
}

/// `[array]`: colocated source/receiver layout on the top surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArraySection {
    pub center: f64,
    pub pitch: f64,
    pub count: usize,
}

/// `[time]`: recording grid and the reconstruction periods of interest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSection {
    /// Record step, s.
    pub dt: f64,
    /// Total simulated period, s (one long run serves every T below).
    pub t_total: f64,
    /// Reconstruction periods selectable at inversion, s.
    #[serde(default)]
    pub t_select: Vec<f64>,
}

/// `[band]`: inversion band and windowing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandSection {
    pub f_lo: f64,
    pub f_hi: f64,
    pub n_omega: usize,
    pub tukey: f64,
}

/// `[trial]`: sampling rectangle and trial-pattern parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialSection {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
    pub n_x: usize,
    pub n_z: usize,
    pub n_p: usize,
    pub outsets: Vec<f64>,
    /// "reciprocal" (default) or "direct".
    #[serde(default = "default_method")]
    pub method: String,
}

fn default_method() -> String {
    "reciprocal".into()
}

/// `[source]`: laser excitation model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSection {
    pub fwhm: f64,
    pub pulse_width: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

/// `[metric]`: contrast-metric neighborhoods.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSection {
    pub dilation: f64,
    pub gap: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.6
}

impl Default for MetricSection {
    fn default() -> Self {
        MetricSection {
            dilation: 1.5e-3,
            gap: 1.5e-3,
            threshold: 0.6,
        }
    }
}

/// `[run]`: execution knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSection {
    pub backend: Backend,
    #[serde(default)]
    pub seed: u64,
    /// Relative measurement-noise level added to both fields; 0 = clean.
    #[serde(default)]
    pub noise_level: f64,
    #[serde(default)]
    pub threads: usize,
}

/// `[paths]`: artifact locations; everything lives under `out_dir`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathsSection {
    pub out_dir: PathBuf,
}

/// The whole experiment definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub material: MaterialSection,
    pub array: ArraySection,
    pub time: TimeSection,
    pub band: BandSection,
    pub trial: TrialSection,
    #[serde(default)]
    pub regularization: RegularizationConfig,
    #[serde(default)]
    pub metric: MetricSection,
    pub source: SourceSection,
    pub run: RunSection,
    pub paths: PathsSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("in {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural validation with field-precise messages.
    pub fn validate(&self) -> Result<(), CliError> {
        let field = |name: &str, msg: String| CliError::Config(format!("{name}: {msg}"));
        self.model()
            .validate()
            .map_err(|e| field("material", e.to_string()))?;
        if self.array.count == 0 {
            return Err(field("array.count", "must be at least 1".into()));
        }
        if !(self.array.pitch > 0.0) {
            return Err(field("array.pitch", "must be positive".into()));
        }
        if !(self.time.dt > 0.0) {
            return Err(field("time.dt", "must be positive".into()));
        }
        let steps = self.time.t_total / self.time.dt;
        if steps < 1.0 || (steps - steps.round()).abs() > 1e-6 {
            return Err(field(
                "time.t_total",
                format!("must be a positive multiple of dt = {}", self.time.dt),
            ));
        }
        for (k, &t) in self.time.t_select.iter().enumerate() {
            let n = t / self.time.dt;
            if !(t > 0.0) || t > self.time.t_total * (1.0 + 1e-12) {
                return Err(field(
                    &format!("time.t_select[{k}]"),
                    format!("must lie in (0, t_total = {}]", self.time.t_total),
                ));
            }
            if (n - n.round()).abs() > 1e-6 {
                return Err(field(
                    &format!("time.t_select[{k}]"),
                    "must be a multiple of dt".into(),
                ));
            }
        }
        let nyquist = 0.5 / self.time.dt;
        if !(0.0 < self.band.f_lo && self.band.f_lo < self.band.f_hi && self.band.f_hi < nyquist)
        {
            return Err(field(
                "band",
                format!(
                    "must satisfy 0 < f_lo < f_hi < Nyquist = {nyquist} Hz, got [{}, {}]",
                    self.band.f_lo, self.band.f_hi
                ),
            ));
        }
        if self.band.n_omega == 0 {
            return Err(field("band.n_omega", "must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.band.tukey) {
            return Err(field("band.tukey", "must lie in [0, 1]".into()));
        }
        self.sampling_grid()
            .validate(&self.model())
            .map_err(|e| field("trial", e.to_string()))?;
        self.trial_config()
            .validate(&self.time_grid())
            .map_err(|e| field("trial", e.to_string()))?;
        match self.trial.method.as_str() {
            "reciprocal" | "direct" => {}
            other => {
                return Err(field(
                    "trial.method",
                    format!("must be \"reciprocal\" or \"direct\", got {other:?}"),
                ))
            }
        }
        self.regularization
            .validate()
            .map_err(|e| field("regularization", e.to_string()))?;
        if !(self.source.fwhm > 0.0 && self.source.pulse_width > 0.0) {
            return Err(field("source", "fwhm and pulse_width must be positive".into()));
        }
        if !(0.0 < self.metric.threshold && self.metric.threshold < 1.0) {
            return Err(field("metric.threshold", "must lie in (0, 1)".into()));
        }
        if self.run.noise_level < 0.0 {
            return Err(field("run.noise_level", "must be nonnegative".into()));
        }
        Ok(())
    }

    /// Defective specimen model.
    pub fn model(&self) -> MaterialModel2D {
        MaterialModel2D {
            width: self.material.width,
            depth: self.material.depth,
            cell_size: self.material.cell_size,
            density: self.material.density,
            c_l: self.material.c_l,
            c_s: self.material.c_s,
            voids: self.material.voids.clone(),
            boundaries: self.material.boundaries,
        }
    }

    /// Intact background model.
    pub fn background(&self) -> MaterialModel2D {
        self.model().background()
    }

    pub fn array_geometry(&self) -> ArrayGeometry {
        ArrayGeometry::colocated(self.array.center, self.array.pitch, self.array.count)
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid {
            dt: self.time.dt,
            n_t: (self.time.t_total / self.time.dt).round() as usize,
        }
    }

    pub fn sampling_grid(&self) -> SamplingGrid {
        SamplingGrid {
            x0: self.trial.x0,
            x1: self.trial.x1,
            z0: self.trial.z0,
            z1: self.trial.z1,
            n_x: self.trial.n_x,
            n_z: self.trial.n_z,
        }
    }

    pub fn trial_config(&self) -> TrialConfig {
        TrialConfig {
            n_p: self.trial.n_p,
            outsets: self.trial.outsets.clone(),
        }
    }

    pub fn laser_at(&self, x: f64) -> SourceSpec {
        SourceSpec::Laser {
            center_x: x,
            fwhm: self.source.fwhm,
            pulse_width: self.source.pulse_width,
            amplitude: self.source.amplitude,
        }
    }

    /// Samples entering the operator for a reconstruction period.
    pub fn n_t_for(&self, t_select: f64) -> Result<usize, CliError> {
        let n = t_select / self.time.dt;
        let n_round = n.round() as usize;
        if !(t_select > 0.0)
            || (n - n.round()).abs() > 1e-6
            || n_round > self.time_grid().n_t
        {
            return Err(CliError::Config(format!(
                "T = {t_select} s must be a multiple of dt within (0, {}]",
                self.time.t_total
            )));
        }
        Ok(n_round)
    }

    /// Stable 64-bit digest of the parsed configuration.
    pub fn hash(&self) -> u64 {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const SMALL_CONFIG: &str = r#"
[material]
width = 20e-3
depth = 10e-3
cell_size = 0.5e-3
density = 2730.0
c_l = 6580.0
c_s = 3211.0

[[material.voids]]
x = 0.0
z = 5e-3
radius = 1.5e-3

[array]
center = 0.0
pitch = 1.5e-3
count = 5

[time]
dt = 2e-7
t_total = 3e-5
t_select = [2e-5, 3e-5]

[band]
f_lo = 0.2e6
f_hi = 1.2e6
n_omega = 11
tukey = 0.1

[trial]
x0 = -3e-3
x1 = 3e-3
z0 = 3e-3
z1 = 7e-3
n_x = 5
n_z = 4
n_p = 2
outsets = [8e-6]

[source]
fwhm = 1e-3
pulse_width = 8e-7

[run]
backend = "elastic"
seed = 11

[paths]
out_dir = "OUT_DIR"
"#;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn small_config_parses() {
        let cfg = parse(SMALL_CONFIG).unwrap();
        assert_eq!(cfg.array.count, 5);
        assert_eq!(cfg.time_grid().n_t, 150);
        assert_eq!(cfg.sampling_grid().n_points(), 20);
        assert_eq!(cfg.run.backend, Backend::Elastic);
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = parse(SMALL_CONFIG).unwrap();
        let b = parse(SMALL_CONFIG).unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.band.n_omega = 13;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn field_precise_errors() {
        let bad = SMALL_CONFIG.replace("t_total = 3e-5", "t_total = 3.1e-7");
        let err = parse(&bad).unwrap_err();
        assert!(err.to_string().contains("t_total"), "{err}");

        let bad = SMALL_CONFIG.replace("f_hi = 1.2e6", "f_hi = 9e6");
        let err = parse(&bad).unwrap_err();
        assert!(err.to_string().contains("Nyquist"), "{err}");

        let bad = SMALL_CONFIG.replace("outsets = [8e-6]", "outsets = [8.3e-7]");
        let err = parse(&bad).unwrap_err();
        assert!(err.to_string().contains("trial"), "{err}");
    }

    #[test]
    fn off_window_t_select_rejected() {
        let cfg = parse(SMALL_CONFIG).unwrap();
        assert!(cfg.n_t_for(2e-5).is_ok());
        assert!(cfg.n_t_for(4e-5).is_err());
        assert!(cfg.n_t_for(2.05e-5).is_err());
    }
}
