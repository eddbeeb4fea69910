//! Discrepancy-principle selection of the regularization weight.

use super::InvError;

/// Result of a discrepancy search.
#[derive(Debug, Clone, Copy)]
pub struct MorozovOutcome {
    pub eta: f64,
    pub residual_norm: f64,
    pub solution_norm: f64,
    /// True when the target was unreachable at the bottom of the η range
    /// (the data cannot be fit to the requested discrepancy).
    pub saturated: bool,
}

/// Find η with residual(η) = `target` within 1%, by bisection on log η.
///
/// `evaluate` must return (residual_norm, solution_norm) and be
/// nondecreasing in η in its first component. `eta_range` brackets the
/// search; when even `eta_min` overshoots the target, the floor is
/// returned with the saturation flag raised.
pub fn morozov_select(
    target: f64,
    eta_range: (f64, f64),
    mut evaluate: impl FnMut(f64) -> Result<(f64, f64), InvError>,
) -> Result<MorozovOutcome, InvError> {
    let (eta_min, eta_max) = eta_range;
    if !(eta_min > 0.0 && eta_max > eta_min) {
        return Err(InvError::Parameter(format!(
            "η range [{eta_min}, {eta_max}] must be positive and increasing"
        )));
    }
    if !(target > 0.0) {
        return Err(InvError::Parameter(format!(
            "discrepancy target must be positive, got {target}"
        )));
    }
    let (res_lo, sol_lo) = evaluate(eta_min)?;
    if res_lo >= target {
        return Ok(MorozovOutcome {
            eta: eta_min,
            residual_norm: res_lo,
            solution_norm: sol_lo,
            saturated: true,
        });
    }
    let (res_hi, sol_hi) = evaluate(eta_max)?;
    if res_hi <= target {
        return Ok(MorozovOutcome {
            eta: eta_max,
            residual_norm: res_hi,
            solution_norm: sol_hi,
            saturated: false,
        });
    }

    let (mut lo, mut hi) = (eta_min.ln(), eta_max.ln());
    let mut best = MorozovOutcome {
        eta: eta_max,
        residual_norm: res_hi,
        solution_norm: sol_hi,
        saturated: false,
    };
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let eta = mid.exp();
        let (res, sol) = evaluate(eta)?;
        best = MorozovOutcome {
            eta,
            residual_norm: res,
            solution_norm: sol,
            saturated: false,
        };
        if (res - target).abs() <= 0.01 * target {
            return Ok(best);
        }
        if res < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}
