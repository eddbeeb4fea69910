//! Excitation models: laser line source, point forces, and trial dipoles.

use serde::{Deserialize, Serialize};

use super::{SimError, TimeGrid};

/// Excitation applied to the model.
///
/// Angles are measured from the +x axis toward +z; onsets are seconds from
/// the start of the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SourceSpec {
    /// Laser line source on the top surface: Gaussian spatial profile,
    /// temporal profile equal to the running integral of a rectangular
    /// heating pulse (ramp to 1 over `pulse_width`, then hold).
    Laser {
        /// Beam center on the surface, m.
        center_x: f64,
        /// Spatial full width at half maximum, m.
        fwhm: f64,
        /// Heating pulse duration, s.
        pulse_width: f64,
        /// Peak force amplitude.
        amplitude: f64,
    },
    /// Vertical point force with a one-sample kick at `onset`.
    Impulse {
        x: f64,
        z: f64,
        amplitude: f64,
        onset: f64,
    },
    /// Opposed point-force couple along the polarization direction,
    /// separated by one grid cell, kicked at `onset`.
    Dipole {
        x: f64,
        z: f64,
        /// Polarization angle θ ∈ [0, π).
        angle: f64,
        amplitude: f64,
        onset: f64,
    },
    /// Weighted superposition of other sources.
    Superposition(Vec<(f64, SourceSpec)>),
}

impl SourceSpec {
    /// Validate parameter ranges; `dt` is the recording step used to check
    /// that onsets land on the time grid.
    pub fn validate(&self, dt: f64) -> Result<(), SimError> {
        match self {
            SourceSpec::Laser {
                fwhm, pulse_width, ..
            } => {
                if !(*fwhm > 0.0) {
                    return Err(SimError::Source(format!("laser FWHM must be > 0, got {fwhm}")));
                }
                if !(*pulse_width > 0.0) {
                    return Err(SimError::Source(format!(
                        "laser pulse width must be > 0, got {pulse_width}"
                    )));
                }
                Ok(())
            }
            SourceSpec::Impulse { onset, .. } => check_onset(*onset, dt),
            SourceSpec::Dipole { angle, onset, .. } => {
                // Trial configurations restrict θ to [0, π); the source
                // itself accepts a full turn so opposite polarizations can
                // be compared directly.
                if !(0.0..2.0 * std::f64::consts::PI).contains(angle) {
                    return Err(SimError::Source(format!(
                        "polarization angle must lie in [0, 2π), got {angle}"
                    )));
                }
                check_onset(*onset, dt)
            }
            SourceSpec::Superposition(parts) => {
                for (_, s) in parts {
                    s.validate(dt)?;
                }
                Ok(())
            }
        }
    }
}

fn check_onset(onset: f64, dt: f64) -> Result<(), SimError> {
    if onset < 0.0 {
        return Err(SimError::Source(format!("onset must be ≥ 0, got {onset}")));
    }
    let steps = onset / dt;
    if (steps - steps.round()).abs() > 1e-6 {
        return Err(SimError::Alignment(format!(
            "onset {onset} s is not an integer multiple of dt = {dt} s"
        )));
    }
    Ok(())
}

/// Gaussian surface weights and ramp-then-hold temporal waveform of the
/// laser source.
///
/// `node_xs` are the surface node positions the beam is sampled on. The
/// spatial weights are normalized so the largest sampled weight is 1; the
/// temporal waveform is sampled at the grid times and peaks at 1 once the
/// heating pulse has finished.
pub fn laser_source_profile(
    fwhm: f64,
    pulse_width: f64,
    center_x: f64,
    node_xs: &[f64],
    grid: &TimeGrid,
) -> Result<(Vec<f64>, Vec<f64>), SimError> {
    if !(fwhm > 0.0 && pulse_width > 0.0) {
        return Err(SimError::Source(
            "laser FWHM and pulse width must be positive".into(),
        ));
    }
    let mut spatial: Vec<f64> = node_xs
        .iter()
        .map(|&x| gaussian_fwhm(x - center_x, fwhm))
        .collect();
    let peak = spatial.iter().cloned().fold(0.0_f64, f64::max);
    if peak > 0.0 {
        for w in &mut spatial {
            *w /= peak;
        }
    }
    let temporal = grid.times().map(|t| heating_ramp(t, pulse_width)).collect();
    Ok((spatial, temporal))
}

/// exp(−4 ln2 · x²/FWHM²): unit peak, value ½ at |x| = FWHM/2.
pub(crate) fn gaussian_fwhm(x: f64, fwhm: f64) -> f64 {
    let k = 4.0 * std::f64::consts::LN_2 / (fwhm * fwhm);
    (-k * x * x).exp()
}

/// Running integral of a unit rectangular pulse of width `tau`, peak-normalized.
pub(crate) fn heating_ramp(t: f64, tau: f64) -> f64 {
    (t / tau).clamp(0.0, 1.0)
}
