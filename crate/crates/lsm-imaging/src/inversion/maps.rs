//! TLSM and multifrequency LSM indicator maps.

use rayon::prelude::*;

use super::morozov::{morozov_select, MorozovOutcome};
use super::operator::{NearFieldOperatorFreq, NearFieldOperatorTime};
use super::tikhonov::{DenseSvd, DenseSvdC, GolubKahan, SolverOp};
use super::{
    IndicatorMap, InvError, MapDomain, RegularizationConfig, SolveRecord, SolverMode,
};
use crate::triallib::{FreqLibrary, SignatureLibrary};

/// Transformed-coordinate view of the time operator for the projected
/// solver: the plain sum scaled by dt·√(Δx·Δy).
struct TimeOpView<'a> {
    op: &'a NearFieldOperatorTime,
    scale: f64,
}

impl SolverOp for TimeOpView<'_> {
    fn rows(&self) -> usize {
        self.op.rows()
    }
    fn cols(&self) -> usize {
        self.op.cols()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.op.apply(x).expect("dimension checked at assembly");
        for v in &mut y {
            *v *= self.scale;
        }
        y
    }
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self
            .op
            .apply_adjoint_raw(y)
            .expect("dimension checked at assembly");
        for v in &mut x {
            *v *= self.scale;
        }
        x
    }
}

fn arrays_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-12))
}

/// One pattern's solve outcome destined for the indicator.
struct PatternOutcome {
    record: Option<SolveRecord>,
    /// Solution norm entering the minimization; infinite when the pattern
    /// carries no signal or nothing can be matched.
    norm: f64,
}

fn outcome_from_morozov(
    s: usize,
    n: usize,
    r: usize,
    m: MorozovOutcome,
    weight_time: f64,
    weight_src: f64,
) -> PatternOutcome {
    let norm = if m.solution_norm > 0.0 {
        m.solution_norm
    } else {
        // Zero recovered density: the data holds nothing that matches this
        // pattern; it must not masquerade as a strong indicator.
        f64::INFINITY
    };
    PatternOutcome {
        record: Some(SolveRecord {
            s,
            n,
            r,
            eta: m.eta,
            residual_norm: m.residual_norm,
            solution_norm: m.solution_norm,
            saturated: m.saturated,
            weight_time,
            weight_src,
        }),
        norm,
    }
}

/// Time-domain LSM indicator 𝔗(z) = 1 / min_{p,t₀} ‖g̃‖ with the
/// Morozov-selected weight per trial pattern.
pub fn tlsm_map(
    op: &NearFieldOperatorTime,
    lib: &SignatureLibrary,
    reg: &RegularizationConfig,
    config_hash: u64,
) -> Result<(IndicatorMap, Vec<SolveRecord>), InvError> {
    reg.validate()?;
    if !arrays_match(&op.array.receivers, &lib.array.receivers) {
        return Err(InvError::Metadata(
            "operator and library disagree on receiver positions".into(),
        ));
    }
    if (op.dt() - lib.time_grid.dt).abs() > 1e-15 * op.dt() {
        return Err(InvError::Metadata(
            "operator and library disagree on the time step".into(),
        ));
    }
    if op.n_t() > lib.n_t() {
        return Err(InvError::Metadata(format!(
            "operator window of {} samples exceeds the library record of {}",
            op.n_t(),
            lib.n_t()
        )));
    }
    if lib.grid.n_points() == 0 || lib.config.n_p == 0 {
        return Err(InvError::Metadata("empty trial library".into()));
    }

    let n_t = op.n_t();
    let dt = op.dt();
    let w_obs = (op.obs_spacing * dt).sqrt();
    let weight_time = dt.sqrt();
    let weight_src = op.src_spacing.sqrt();

    let use_dense = match reg.solver {
        SolverMode::DenseSvd => true,
        SolverMode::ProjectedBidiagonalization => false,
        SolverMode::Auto => op.rows().max(op.cols()) <= reg.dense_limit,
    };
    let dense = if use_dense {
        Some(DenseSvd::new(op.dense_matrix())?)
    } else {
        None
    };
    let view = TimeOpView {
        op,
        scale: op.solver_scale(),
    };

    let n_points = lib.grid.n_points();
    let n_p = lib.config.n_p;
    let n_r = lib.config.n_outsets();

    let per_point: Vec<(f64, (u32, u32), Vec<SolveRecord>)> = (0..n_points)
        .into_par_iter()
        .map(|s| -> Result<_, InvError> {
            let mut best = f64::INFINITY;
            let mut winner = (0u32, 0u32);
            let mut records = Vec::with_capacity(n_p * n_r);
            for n in 0..n_p {
                for r in 0..n_r {
                    let mut rhs = lib.rhs(s, n, r, n_t);
                    for v in &mut rhs {
                        *v *= w_obs;
                    }
                    let b_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let outcome = if b_norm == 0.0 {
                        PatternOutcome {
                            record: None,
                            norm: f64::INFINITY,
                        }
                    } else {
                        let target = reg.delta_floor() * b_norm;
                        let m = if let Some(svd) = &dense {
                            let (beta, floor2) = svd.project(&rhs);
                            let s1 = svd.sigma_max().powi(2).max(f64::MIN_POSITIVE);
                            morozov_select(
                                target,
                                (reg.eta_min_rel * s1, reg.eta_max_rel * s1),
                                |eta| {
                                    let sol =
                                        svd.solve_projected(&beta, floor2, eta, false)?;
                                    Ok((sol.residual_norm, sol.solution_norm))
                                },
                            )?
                        } else {
                            match GolubKahan::new(&view, &rhs, reg.projection_cap) {
                                Ok(gk) => {
                                    let s1 =
                                        gk.sigma_max().powi(2).max(f64::MIN_POSITIVE);
                                    morozov_select(
                                        target,
                                        (reg.eta_min_rel * s1, reg.eta_max_rel * s1),
                                        |eta| {
                                            let sol = gk.solve(eta, false)?;
                                            Ok((sol.residual_norm, sol.solution_norm))
                                        },
                                    )?
                                }
                                Err(InvError::Numerical(_)) => {
                                    // Aᵀφ = 0: nothing in the data couples to
                                    // this pattern.
                                    MorozovOutcome {
                                        eta: reg.eta_min_rel,
                                        residual_norm: b_norm,
                                        solution_norm: 0.0,
                                        saturated: true,
                                    }
                                }
                                Err(e) => return Err(e),
                            }
                        };
                        outcome_from_morozov(s, n, r, m, weight_time, weight_src)
                    };
                    if let Some(rec) = outcome.record {
                        records.push(rec);
                    }
                    if outcome.norm < best {
                        best = outcome.norm;
                        winner = (n as u32, r as u32);
                    }
                }
            }
            let value = if best.is_finite() { 1.0 / best } else { 0.0 };
            Ok((value, winner, records))
        })
        .collect::<Result<_, _>>()?;

    let mut values = Vec::with_capacity(n_points);
    let mut winners = Vec::with_capacity(n_points);
    let mut records = Vec::new();
    for (v, w, recs) in per_point {
        values.push(v);
        winners.push(w);
        records.extend(recs);
    }
    // Saturation alone is normal for clean synthetic data; the map is
    // meaningless only when no pattern recovered any signal at all.
    let degenerate = values.iter().all(|&v| v == 0.0);
    Ok((
        IndicatorMap {
            grid: lib.grid.clone(),
            values,
            winners,
            domain: MapDomain::Time,
            degenerate,
            config_hash,
        },
        records,
    ))
}

/// Multifrequency LSM indicator 𝔏(z) = 1 / min_p ‖ĝ‖ over the stacked
/// per-frequency system with a single η shared across frequencies.
pub fn lsm_map(
    op: &NearFieldOperatorFreq,
    lib: &FreqLibrary,
    reg: &RegularizationConfig,
    config_hash: u64,
) -> Result<(IndicatorMap, Vec<SolveRecord>), InvError> {
    reg.validate()?;
    if op.n_m != lib.n_m {
        return Err(InvError::Metadata(
            "operator and library disagree on the receiver count".into(),
        ));
    }
    if op.freqs.len() != lib.freqs.len()
        || op
            .freqs
            .iter()
            .zip(&lib.freqs)
            .any(|(a, b)| (a - b).abs() > 1e-6 * a.abs().max(1.0))
    {
        return Err(InvError::Metadata(
            "operator and library disagree on the frequency band".into(),
        ));
    }

    let scale = op.solver_scale();
    let w_obs = op.obs_spacing.sqrt();
    let weight_src = op.src_spacing.sqrt();
    let n_omega = op.n_omega();
    let n_m = op.n_m;

    // One SVD per frequency block, shared by every trial pattern.
    let svds: Vec<DenseSvdC> = op
        .blocks
        .par_iter()
        .map(|b| DenseSvdC::new(b.map(|v| v * scale)))
        .collect::<Result<_, _>>()?;
    let s1 = svds
        .iter()
        .map(|s| s.sigma_max())
        .fold(0.0_f64, f64::max)
        .powi(2)
        .max(f64::MIN_POSITIVE);

    let n_points = lib.grid.n_points();
    let n_p = lib.n_p;

    let per_point: Vec<(f64, (u32, u32), Vec<SolveRecord>)> = (0..n_points)
        .into_par_iter()
        .map(|s| -> Result<_, InvError> {
            let mut best = f64::INFINITY;
            let mut winner = (0u32, 0u32);
            let mut records = Vec::with_capacity(n_p);
            for n in 0..n_p {
                let col = lib.column(s * n_p + n);
                // Per-block projections of the weighted rhs, reused for
                // every η probed by the bisection.
                let mut projections = Vec::with_capacity(n_omega);
                let mut b_norm2 = 0.0;
                for (kappa, svd) in svds.iter().enumerate() {
                    let seg: Vec<num_complex::Complex64> = col
                        [kappa * n_m..(kappa + 1) * n_m]
                        .iter()
                        .map(|v| v * w_obs)
                        .collect();
                    b_norm2 += seg.iter().map(|v| v.norm_sqr()).sum::<f64>();
                    projections.push(svd.project(&seg));
                }
                let b_norm = b_norm2.sqrt();
                let outcome = if b_norm == 0.0 {
                    PatternOutcome {
                        record: None,
                        norm: f64::INFINITY,
                    }
                } else {
                    let target = reg.delta_floor() * b_norm;
                    let m = morozov_select(
                        target,
                        (reg.eta_min_rel * s1, reg.eta_max_rel * s1),
                        |eta| {
                            let mut res2 = 0.0;
                            let mut sol2 = 0.0;
                            for (svd, (beta, floor2)) in svds.iter().zip(&projections) {
                                let (r2, s2) = svd.accumulate(beta, *floor2, eta, None);
                                res2 += r2;
                                sol2 += s2;
                            }
                            Ok((res2.max(0.0).sqrt(), sol2.sqrt()))
                        },
                    )?;
                    outcome_from_morozov(s, n, 0, m, 0.0, weight_src)
                };
                if let Some(rec) = outcome.record {
                    records.push(rec);
                }
                if outcome.norm < best {
                    best = outcome.norm;
                    winner = (n as u32, 0);
                }
            }
            let value = if best.is_finite() { 1.0 / best } else { 0.0 };
            Ok((value, winner, records))
        })
        .collect::<Result<_, _>>()?;

    let mut values = Vec::with_capacity(n_points);
    let mut winners = Vec::with_capacity(n_points);
    let mut records = Vec::new();
    for (v, w, recs) in per_point {
        values.push(v);
        winners.push(w);
        records.extend(recs);
    }
    let degenerate = values.iter().all(|&v| v == 0.0);
    Ok((
        IndicatorMap {
            grid: lib.grid.clone(),
            values,
            winners,
            domain: MapDomain::Freq,
            degenerate,
            config_hash,
        },
        records,
    ))
}
