//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured figures once its assertions hold.
//!
//! The end-to-end reconstructions run a bench-scale model (geometry ×10,
//! frequencies ÷10 relative to the full-scale experiments) so wall time
//! stays within a CI budget; solver and imaging behavior carry over
//! because wavelengths per cell and per domain are preserved.

use std::sync::Mutex;
use std::time::Instant;

use lsm_imaging::calibration::{self, ArrivalMode, ArrivalPick, ArrivalPickSet};
use lsm_imaging::dataops::{self, BlockKind, WaveformBlock};
use lsm_imaging::imaging::{contrast_metric, make_disk_masks, threshold_map};
use lsm_imaging::inversion::tikhonov::{DenseSvd, GolubKahan, SolverOp};
use lsm_imaging::inversion::{
    lsm_map, morozov_select, tlsm_map, IndicatorMap, NearFieldOperatorFreq,
    NearFieldOperatorTime, RegularizationConfig,
};
use lsm_imaging::triallib::{
    build_freq_library, build_library_reciprocal, build_time_library, SamplingGrid,
    SignatureLibrary, TrialConfig,
};
use lsm_imaging::wavesim::{
    record_traces, ArrayGeometry, Backend, BoundarySpec, CircularVoid, MaterialModel2D,
    SimResult, SourceSpec, TimeGrid,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// The heavy end-to-end criteria run one at a time.
static HEAVY: Mutex<()> = Mutex::new(());

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

fn rng_stream(seed: u64) -> impl FnMut() -> f64 {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(13);
    move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

fn random_block(n_m: usize, n_i: usize, n_t: usize, seed: u64) -> WaveformBlock {
    let array = ArrayGeometry {
        receivers: (0..n_m).map(|k| k as f64 * 1e-3).collect(),
        sources: (0..n_i).map(|k| k as f64 * 2e-3).collect(),
    };
    let grid = TimeGrid::new(5e-9, n_t).unwrap();
    let mut b = WaveformBlock::zeros(array, grid, BlockKind::Scattered);
    let mut next = rng_stream(seed);
    for v in &mut b.values {
        *v = next();
    }
    b
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut next = rng_stream(seed);
    DMatrix::from_fn(rows, cols, |_, _| next())
}

struct DenseOp {
    a: DMatrix<f64>,
}

impl SolverOp for DenseOp {
    fn rows(&self) -> usize {
        self.a.nrows()
    }
    fn cols(&self) -> usize {
        self.a.ncols()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.a * DVector::from_column_slice(x)).as_slice().to_vec()
    }
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        (self.a.transpose() * DVector::from_column_slice(y))
            .as_slice()
            .to_vec()
    }
}

// --- bench-scale experiment fixtures -----------------------------------------

const BAND: (f64, f64) = (0.6e6, 2.1e6);
const DT: f64 = 50e-9;
const T0_DEFAULT: f64 = 22.5e-6;

fn bench_model(voids: Vec<CircularVoid>) -> MaterialModel2D {
    MaterialModel2D {
        width: 60e-3,
        depth: 30e-3,
        cell_size: 0.25e-3,
        density: 2730.0,
        c_l: 6580.0,
        c_s: 3211.0,
        voids,
        boundaries: BoundarySpec::plate(),
    }
}

fn bench_array() -> ArrayGeometry {
    ArrayGeometry::colocated(0.0, 1.5e-3, 17)
}

fn bench_reg() -> RegularizationConfig {
    RegularizationConfig {
        delta: 0.2,
        projection_cap: 150,
        ..Default::default()
    }
}

/// Simulate the array protocol on both specimens and return the
/// band-passed scattered block.
fn simulate_scattered(
    model: &MaterialModel2D,
    array: &ArrayGeometry,
    grid: &TimeGrid,
) -> WaveformBlock {
    let background = model.background();
    let jobs: Vec<(bool, usize)> = (0..array.n_sources())
        .map(|i| (true, i))
        .chain((0..array.n_sources()).map(|i| (false, i)))
        .collect();
    let results: Vec<(bool, usize, SimResult)> = jobs
        .par_iter()
        .map(|&(defective, i)| {
            let m = if defective { model } else { &background };
            let src = SourceSpec::Laser {
                center_x: array.sources[i],
                fwhm: 0.5e-3,
                pulse_width: 90e-9,
                amplitude: 1.0,
            };
            (
                defective,
                i,
                record_traces(m, &src, array, grid, Backend::Elastic).unwrap(),
            )
        })
        .collect();
    let mut total = WaveformBlock::zeros(array.clone(), *grid, BlockKind::Total);
    let mut free = WaveformBlock::zeros(array.clone(), *grid, BlockKind::Free);
    for (defective, i, r) in results {
        let b = if defective { &mut total } else { &mut free };
        for m in 0..array.n_receivers() {
            b.trace_mut(m, i).copy_from_slice(&r.traces[m]);
        }
    }
    let v = dataops::scattered_field(&total, &free).unwrap();
    dataops::bandpass(&v, BAND.0, BAND.1).unwrap()
}

/// Reciprocal library on the intact background, band-passed like the data.
fn build_lib(
    model: &MaterialModel2D,
    sgrid: &SamplingGrid,
    tcfg: &TrialConfig,
    array: &ArrayGeometry,
    grid: &TimeGrid,
) -> SignatureLibrary {
    let (lib, stats) = build_library_reciprocal(
        &model.background(),
        sgrid,
        tcfg,
        array,
        grid,
        Backend::Elastic,
    )
    .unwrap();
    assert_eq!(stats.simulations, array.n_receivers());
    lib.bandpassed(BAND.0, BAND.1).unwrap()
}

/// Distance from the map peak to the nearest point of the void boundary,
/// in sampling cells.
fn argmax_boundary_cells(map: &IndicatorMap, void: &CircularVoid) -> f64 {
    let (x, z) = map.grid.point(map.argmax());
    let dist = ((x - void.x).powi(2) + (z - void.z).powi(2)).sqrt();
    let (dx, dz) = map.grid.spacing();
    (dist - void.radius).abs() / dx.max(dz)
}

// ---------------------------------------------------------------------------
// 1. operator oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_operator_oracle() {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for seed in 0..100 {
        let block = random_block(4, 4, 32, seed);
        let op = NearFieldOperatorTime::new(&block, 32).unwrap();
        let mut next = rng_stream(seed + 1000);
        let g: Vec<f64> = (0..4 * 32).map(|_| next()).collect();
        let fast = op.apply(&g).unwrap();
        // Independent oracle: the triple sum written out.
        let mut scale = 0.0_f64;
        let mut err = 0.0_f64;
        for m in 0..4 {
            for k in 0..32 {
                let mut acc = 0.0;
                for i in 0..4 {
                    let v = block.trace(m, i);
                    for j in 0..k {
                        acc += v[k - 1 - j] * g[i * 32 + j];
                    }
                }
                scale = scale.max(acc.abs());
                err = err.max((fast[m * 32 + k] - acc).abs());
            }
        }
        worst = worst.max(err / scale);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(worst <= 1e-10, "worst relative error {worst:e}");
    assert!(elapsed < 5.0, "operator oracle took {elapsed:.2} s");
    println!(
        "ACCEPTANCE 1 operator-oracle: PASS (worst rel err {worst:.2e}, {elapsed:.2} s)"
    );
}

// ---------------------------------------------------------------------------
// 2. adjoint identity
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_adjoint_identity() {
    let mut worst = 0.0_f64;
    for seed in 0..100 {
        let block = random_block(5, 3, 24, seed + 7);
        let op = NearFieldOperatorTime::new(&block, 24).unwrap();
        let mut next = rng_stream(seed + 2000);
        let g: Vec<f64> = (0..3 * 24).map(|_| next()).collect();
        let r: Vec<f64> = (0..5 * 24).map(|_| next()).collect();
        let ng = op.apply(&g).unwrap();
        let ntr = op.apply_adjoint(&r).unwrap();
        let dt = op.dt();
        let lhs = op.obs_spacing * dt * ng.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
        let rhs = op.src_spacing * dt * g.iter().zip(&ntr).map(|(a, b)| a * b).sum::<f64>();
        let g_norm = (op.src_spacing * dt * g.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let r_norm = (op.obs_spacing * dt * r.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let bound = g_norm * r_norm * op.norm_frobenius();
        worst = worst.max((lhs - rhs).abs() / bound);
    }
    assert!(worst <= 1e-10, "worst normalized mismatch {worst:e}");
    println!("ACCEPTANCE 2 adjoint-identity: PASS (worst {worst:.2e})");
}

// ---------------------------------------------------------------------------
// 3. Tikhonov oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_tikhonov_oracle() {
    let mut worst_dense = 0.0_f64;
    let mut worst_proj = 0.0_f64;
    for seed in 0..10 {
        let a = random_matrix(40, 30, seed + 31);
        let mut next = rng_stream(seed + 3000);
        let b: Vec<f64> = (0..40).map(|_| next()).collect();
        for eta in [1e-5, 1e-2, 1.0] {
            // Independent oracle: (AᵀA + ηI) g = Aᵀb by LU.
            let ata = a.transpose() * &a + DMatrix::identity(30, 30) * eta;
            let atb = a.transpose() * DVector::from_column_slice(&b);
            let want = ata.lu().solve(&atb).unwrap();
            let scale = want.amax();

            let svd = DenseSvd::new(a.clone()).unwrap();
            let got = svd.solve(&b, eta).unwrap();
            for (x, y) in got.g.iter().zip(want.iter()) {
                worst_dense = worst_dense.max((x - y).abs() / scale);
            }

            let gk = GolubKahan::new(&DenseOp { a: a.clone() }, &b, 30).unwrap();
            let got = gk.solve(eta, true).unwrap();
            for (x, y) in got.g.iter().zip(want.iter()) {
                worst_proj = worst_proj.max((x - y).abs() / scale);
            }
        }
    }
    assert!(worst_dense <= 1e-8, "dense mismatch {worst_dense:e}");
    assert!(worst_proj <= 1e-8, "projected mismatch {worst_proj:e}");
    println!(
        "ACCEPTANCE 3 tikhonov-oracle: PASS (dense {worst_dense:.2e}, projected {worst_proj:.2e})"
    );
}

// ---------------------------------------------------------------------------
// 4. Morozov
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_morozov() {
    let mut worst = 0.0_f64;
    for seed in 0..10 {
        // Attainable target: rhs mostly in range.
        let a = random_matrix(20, 15, seed + 91);
        let x = random_matrix(15, 1, seed + 92);
        let ax = &a * &x;
        let noise = random_matrix(20, 1, seed + 93);
        let b_vec = &ax + noise * (0.02 * ax.norm() / 4.0);
        let b: Vec<f64> = b_vec.as_slice().to_vec();
        let b_norm = b_vec.norm();
        let svd = DenseSvd::new(a).unwrap();
        let s1 = svd.sigma_max().powi(2);
        let out = morozov_select(0.1 * b_norm, (1e-12 * s1, 1e4 * s1), |eta| {
            let s = svd.solve(&b, eta)?;
            Ok((s.residual_norm, s.solution_norm))
        })
        .unwrap();
        assert!(!out.saturated, "seed {seed}: attainable target saturated");
        worst = worst.max((out.residual_norm - 0.1 * b_norm).abs() / b_norm);
    }
    assert!(worst <= 0.001, "worst discrepancy miss {worst:e}");

    // Unattainable target: rank-1 operator, rhs with an out-of-range part.
    let col = random_matrix(10, 1, 5);
    let a = &col * random_matrix(1, 6, 6);
    let svd = DenseSvd::new(a).unwrap();
    let mut b = vec![0.0; 10];
    b[0] = 1.0;
    b[1] = -1.0;
    let s1 = svd.sigma_max().powi(2);
    let out = morozov_select(1e-6, (1e-12 * s1, 1e4 * s1), |eta| {
        let s = svd.solve(&b, eta)?;
        Ok((s.residual_norm, s.solution_norm))
    })
    .unwrap();
    assert!(out.saturated, "unattainable target must raise the flag");
    println!("ACCEPTANCE 4 morozov: PASS (worst miss {worst:.1e} of ‖φ‖, saturation flagged)");
}

// ---------------------------------------------------------------------------
// 5. reciprocity library
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_reciprocity_library() {
    let model = MaterialModel2D {
        width: 14e-3,
        depth: 7e-3,
        cell_size: 0.25e-3,
        density: 2730.0,
        c_l: 6580.0,
        c_s: 3211.0,
        voids: vec![],
        boundaries: BoundarySpec {
            top: lsm_imaging::wavesim::EdgeCondition::TractionFree,
            bottom: lsm_imaging::wavesim::EdgeCondition::TractionFree,
            left: lsm_imaging::wavesim::EdgeCondition::Absorbing { cells: 15 },
            right: lsm_imaging::wavesim::EdgeCondition::Absorbing { cells: 15 },
        },
    };
    let array = ArrayGeometry::colocated(0.0, 1.5e-3, 3);
    let dt = lsm_imaging::wavesim::stable_dt(&model, Backend::Elastic).unwrap() * 2.0;
    let grid = TimeGrid::new(dt, 200).unwrap();
    let sgrid = SamplingGrid {
        x0: -1.5e-3,
        x1: 1.5e-3,
        z0: 2e-3,
        z1: 4.5e-3,
        n_x: 3,
        n_z: 3,
    };
    let cfg = TrialConfig {
        n_p: 2,
        outsets: vec![0.0],
    };
    let mut worst = (0.0_f64, Backend::Elastic);
    for backend in [Backend::Elastic, Backend::Scalar] {
        let (direct, _) =
            build_time_library(&model, &sgrid, &cfg, &array, &grid, backend).unwrap();
        let (recip, stats) =
            build_library_reciprocal(&model, &sgrid, &cfg, &array, &grid, backend).unwrap();
        assert_eq!(
            stats.simulations,
            array.n_receivers(),
            "{backend:?}: reciprocal path must run exactly N_m simulations"
        );
        for s in 0..9 {
            for n in 0..2 {
                for m in 0..3 {
                    let a = direct.base_trace(s, n, m);
                    let b = recip.base_trace(s, n, m);
                    let scale = a
                        .iter()
                        .chain(b.iter())
                        .fold(0.0_f64, |acc, &v| acc.max(v.abs()));
                    let diff = a
                        .iter()
                        .zip(b)
                        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()));
                    if scale > 0.0 && diff / scale > worst.0 {
                        worst = (diff / scale, backend);
                    }
                }
            }
        }
    }
    assert!(
        worst.0 <= 1e-6,
        "worst direct/reciprocal disagreement {:.2e} ({:?})",
        worst.0,
        worst.1
    );
    println!(
        "ACCEPTANCE 5 reciprocity-library: PASS (worst {:.2e}, N_m runs on both backends)",
        worst.0
    );
}

// ---------------------------------------------------------------------------
// 6. end-to-end bench scale, single void
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_end_to_end_single_void() {
    let _guard = HEAVY.lock().unwrap();
    let start = Instant::now();
    let void = CircularVoid {
        x: 0.0,
        z: 15e-3,
        radius: 2e-3,
    };
    let model = bench_model(vec![void]);
    let array = bench_array();
    let grid = TimeGrid::new(DT, 900).unwrap(); // 45 µs
    let sgrid = SamplingGrid {
        x0: -10.5e-3,
        x1: 10.5e-3,
        z0: 4.5e-3,
        z1: 25.5e-3,
        n_x: 21,
        n_z: 21,
    };
    let tcfg = TrialConfig {
        n_p: 4,
        outsets: vec![T0_DEFAULT],
    };
    let reg = bench_reg();

    let v = simulate_scattered(&model, &array, &grid);
    let lib = build_lib(&model, &sgrid, &tcfg, &array, &grid);

    let op = NearFieldOperatorTime::new(&v, grid.n_t).unwrap();
    let (tmap, _) = tlsm_map(&op, &lib, &reg, 0).unwrap();

    let sp = dataops::spectra(&v, 0.1, BAND, 51).unwrap();
    let fop = NearFieldOperatorFreq::new(&sp, &array).unwrap();
    let flib = build_freq_library(&lib, BAND, 51, 0.1, grid.n_t).unwrap();
    let (lmap, _) = lsm_map(&fop, &flib, &reg, 0).unwrap();

    let mask = make_disk_masks(&sgrid, &[void], 1.5e-3, 1.5e-3).unwrap();
    let c_t = contrast_metric(&tmap, &mask).unwrap();
    let c_l = contrast_metric(&lmap, &mask).unwrap();
    let cells_t = argmax_boundary_cells(&tmap, &void);
    let cells_l = argmax_boundary_cells(&lmap, &void);

    let elapsed = start.elapsed().as_secs_f64();
    let workers = rayon::current_num_threads().max(1) as f64;
    // The stated budget is 10 minutes on 8 workers; scale by the compute
    // actually available here.
    let core_budget = 600.0 * 8.0;
    assert!(!tmap.degenerate && !lmap.degenerate);
    assert!(
        cells_t <= 2.0,
        "TLSM argmax {cells_t:.2} cells from the void boundary"
    );
    assert!(
        cells_l <= 2.0,
        "LSM argmax {cells_l:.2} cells from the void boundary"
    );
    assert!(c_t >= 5.0, "TLSM contrast {c_t:.2} below 5");
    assert!(c_l >= 5.0, "LSM contrast {c_l:.2} below 5");
    assert!(
        elapsed * workers <= core_budget,
        "used {:.0} core-seconds of the {core_budget:.0} budget",
        elapsed * workers
    );
    println!(
        "ACCEPTANCE 6 end-to-end: PASS (argmax 𝔗 {cells_t:.2} / 𝔏 {cells_l:.2} cells from boundary, \
         contrast 𝔗 {c_t:.1} / 𝔏 {c_l:.1}, {elapsed:.0} s on {workers:.0} workers)"
    );
}

// ---------------------------------------------------------------------------
// 7. trend reproduction, shadowed two-void sample
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_trend_two_voids() {
    let _guard = HEAVY.lock().unwrap();
    let voids = vec![
        CircularVoid {
            x: 0.0,
            z: 11e-3,
            radius: 3e-3,
        },
        CircularVoid {
            x: 0.0,
            z: 19e-3,
            radius: 1.5e-3,
        },
    ];
    let model = bench_model(voids.clone());
    let array = bench_array();
    let grid = TimeGrid::new(DT, 1500).unwrap(); // 75 µs
    let sgrid = SamplingGrid {
        x0: -10.5e-3,
        x1: 10.5e-3,
        z0: 4.5e-3,
        z1: 25.5e-3,
        n_x: 15,
        n_z: 15,
    };
    let tcfg = TrialConfig {
        n_p: 4,
        outsets: vec![T0_DEFAULT],
    };
    let reg = bench_reg();

    let v = simulate_scattered(&model, &array, &grid);
    let lib = build_lib(&model, &sgrid, &tcfg, &array, &grid);
    let mask = make_disk_masks(&sgrid, &voids, 1.5e-3, 1.5e-3).unwrap();

    let sweep_t = [31e-6, 60e-6, 75e-6];
    let mut table = Vec::new();
    for &t_sel in &sweep_t {
        let n_t = (t_sel / DT).round() as usize;
        let op = NearFieldOperatorTime::new(&v, n_t).unwrap();
        let (tmap, _) = tlsm_map(&op, &lib, &reg, 0).unwrap();
        let truncated = v.truncated(n_t).unwrap();
        let sp = dataops::spectra(&truncated, 0.1, BAND, 51).unwrap();
        let fop = NearFieldOperatorFreq::new(&sp, &array).unwrap();
        let flib = build_freq_library(&lib, BAND, 51, 0.1, n_t).unwrap();
        let (lmap, _) = lsm_map(&fop, &flib, &reg, 0).unwrap();
        let c_t = contrast_metric(&tmap, &mask).unwrap();
        let c_l = contrast_metric(&lmap, &mask).unwrap();
        table.push((t_sel, c_t, c_l));
    }
    println!("  T sweep (T, contrast 𝔗, contrast 𝔏): {table:?}");
    // The paper's headline trend: the time-domain indicator wins at the
    // two longest reconstruction periods.
    for &(t_sel, c_t, c_l) in &table[1..] {
        assert!(
            c_t >= c_l,
            "at T = {t_sel:.1e} s: contrast 𝔗 {c_t:.2} < 𝔏 {c_l:.2}"
        );
    }
    println!("ACCEPTANCE 7 trend-two-voids: PASS ({table:?})");
}

// ---------------------------------------------------------------------------
// 8. activation-time causality
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_activation_time() {
    let _guard = HEAVY.lock().unwrap();
    let void = CircularVoid {
        x: 0.0,
        z: 20e-3,
        radius: 2e-3,
    };
    let model = bench_model(vec![void]);
    let array = bench_array();
    let grid = TimeGrid::new(DT, 900).unwrap();
    // Tight grid around the true void: the criterion reads the indicator
    // at the defect location.
    let sgrid = SamplingGrid {
        x0: -1.05e-3,
        x1: 1.05e-3,
        z0: 20e-3 - 1.05e-3,
        z1: 20e-3 + 1.05e-3,
        n_x: 3,
        n_z: 3,
    };
    let reg = bench_reg();
    let v = simulate_scattered(&model, &array, &grid);
    let op = NearFieldOperatorTime::new(&v, grid.n_t).unwrap();

    // Sufficient activation time vs. one far below the two-way travel
    // requirement (the longitudinal one-way time alone is ~3 µs).
    let mut values = Vec::new();
    for t0 in [T0_DEFAULT, 1e-6] {
        let tcfg = TrialConfig {
            n_p: 4,
            outsets: vec![t0],
        };
        let lib = build_lib(&model, &sgrid, &tcfg, &array, &grid);
        let (map, _) = tlsm_map(&op, &lib, &reg, 0).unwrap();
        values.push(map.value_at(1, 1));
    }
    let (sufficient, early) = (values[0], values[1]);
    assert!(
        sufficient >= 2.0 * early,
        "𝔗(z₀) with causal t₀ = {sufficient:.3e} vs non-causal {early:.3e}"
    );
    println!(
        "ACCEPTANCE 8 activation-time: PASS (causal/non-causal ratio {:.1})",
        sufficient / early
    );
}

// ---------------------------------------------------------------------------
// 9. calibration
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_calibration() {
    use rand::SeedableRng;
    use rand_distr::Distribution;
    let (c_l, c_s, h) = (6580.0, 3211.0, 3e-3);
    let geometry = ArrayGeometry::colocated(0.0, 150e-6, 61);

    let make = |noise: f64, seed: u64, per_mode: usize| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let mut picks = Vec::new();
        for mode in [
            ArrivalMode::Ssl,
            ArrivalMode::Saw,
            ArrivalMode::Ll,
            ArrivalMode::Ss,
            ArrivalMode::Ls,
        ] {
            for k in 0..per_mode {
                let src = (k * 5) % 25;
                let rec = 35 + (k * 7) % 25;
                let d = (geometry.receivers[rec] - geometry.sources[src]).abs();
                let mut t = calibration::predict_arrival(mode, d, c_l, c_s, h).unwrap();
                if noise > 0.0 {
                    t *= 1.0 + noise * normal.sample(&mut rng);
                }
                picks.push(ArrivalPick {
                    mode,
                    source_index: src,
                    receiver_index: rec,
                    time: t,
                });
            }
        }
        ArrivalPickSet {
            picks,
            geometry: geometry.clone(),
        }
    };

    // Noiseless recovery to 1e-9 relative.
    let fit = calibration::fit_background(&make(0.0, 0, 10)).unwrap();
    assert!((fit.c_l - c_l).abs() / c_l < 1e-9);
    assert!((fit.c_s - c_s).abs() / c_s < 1e-9);
    assert!((fit.thickness - h).abs() / h < 1e-9);

    // 1% time noise, 20 picks per mode, 20 seeds: 2% per parameter.
    let mut worst = 0.0_f64;
    for seed in 0..20 {
        let fit = calibration::fit_background(&make(0.01, seed, 20)).unwrap();
        worst = worst
            .max((fit.c_l - c_l).abs() / c_l)
            .max((fit.c_s - c_s).abs() / c_s)
            .max((fit.thickness - h).abs() / h);
    }
    assert!(worst < 0.02, "worst noisy-recovery error {worst:.4}");

    // Rayleigh residual at the identified speeds.
    let c_r = calibration::rayleigh_speed(c_l, c_s).unwrap();
    let res = calibration::rayleigh_residual(c_r, c_l, c_s).abs();
    assert!(res <= 1e-12, "secular residual {res:e}");
    println!(
        "ACCEPTANCE 9 calibration: PASS (noisy worst {worst:.2e}, secular residual {res:.1e})"
    );
}

// ---------------------------------------------------------------------------
// 10. invariance suite
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_invariances() {
    use proptest::prelude::*;
    use proptest::test_runner::{Config, TestRunner};

    // Scale invariance of the contrast metric and thresholded map, and
    // monotonicity of the threshold in its fraction.
    let mut runner = TestRunner::new(Config {
        cases: 64,
        ..Config::default()
    });
    runner
        .run(
            &(
                proptest::collection::vec(0.0_f64..1e3, 15),
                1e-6_f64..1e6,
                0.05_f64..0.95,
                0.05_f64..0.95,
            ),
            |(values, c, f1, f2)| {
                let grid = SamplingGrid {
                    x0: -10e-3,
                    x1: 10e-3,
                    z0: 5e-3,
                    z1: 25e-3,
                    n_x: 5,
                    n_z: 3,
                };
                let map = IndicatorMap {
                    grid: grid.clone(),
                    values: values.clone(),
                    winners: vec![(0, 0); 15],
                    domain: lsm_imaging::inversion::MapDomain::Time,
                    degenerate: false,
                    config_hash: 0,
                };
                let scaled = IndicatorMap {
                    values: values.iter().map(|v| v * c).collect(),
                    ..map.clone()
                };
                let mask = lsm_imaging::imaging::RegionMask {
                    defect: vec![7],
                    background: (0..15).filter(|&k| k != 7).collect(),
                    grid,
                };
                if let (Ok(a), Ok(b)) =
                    (contrast_metric(&map, &mask), contrast_metric(&scaled, &mask))
                {
                    prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
                }
                let ta = threshold_map(&map, f1).unwrap();
                let tb = threshold_map(&scaled, f1).unwrap();
                prop_assert_eq!(&ta.keep, &tb.keep);
                let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
                let loose = threshold_map(&map, lo).unwrap();
                let tight = threshold_map(&map, hi).unwrap();
                for (l, t) in loose.keep.iter().zip(&tight.keep) {
                    prop_assert!(*l || !*t, "threshold must be monotone in the fraction");
                }
                Ok(())
            },
        )
        .unwrap();

    // Outset shift exactness on a synthetic library.
    let model = bench_model(vec![]);
    let array = ArrayGeometry::colocated(0.0, 1.5e-3, 3);
    let dt = lsm_imaging::wavesim::stable_dt(&model, Backend::Elastic).unwrap() * 2.0;
    let grid = TimeGrid::new(dt, 120).unwrap();
    let sgrid = SamplingGrid {
        x0: 0.0,
        x1: 0.0,
        z0: 10e-3,
        z1: 10e-3,
        n_x: 1,
        n_z: 1,
    };
    let tcfg = TrialConfig {
        n_p: 1,
        outsets: vec![0.0, 9.0 * dt],
    };
    let (lib, _) =
        build_time_library(&model, &sgrid, &tcfg, &array, &grid, Backend::Elastic).unwrap();
    let r0 = lib.rhs(0, 0, 0, 120);
    let r1 = lib.rhs(0, 0, 1, 120);
    for m in 0..3 {
        for t in 0..9 {
            assert_eq!(r1[m * 120 + t], 0.0);
        }
        for t in 9..120 {
            assert_eq!(r1[m * 120 + t], r0[m * 120 + t - 9], "shift must be exact");
        }
    }

    // Map scaling law under rhs scaling with Morozov selection.
    let block = random_block(3, 3, 16, 77);
    let op = NearFieldOperatorTime::new(&block, 16).unwrap();
    let sgrid2 = SamplingGrid {
        x0: -1e-3,
        x1: 1e-3,
        z0: 1e-3,
        z1: 2e-3,
        n_x: 2,
        n_z: 2,
    };
    let mut next = rng_stream(4242);
    let traces: Vec<f64> = (0..4 * 2 * 3 * 16).map(|_| next()).collect();
    let lib2 = lsm_imaging::triallib::SignatureLibrary::from_raw_parts(
        sgrid2,
        2,
        vec![0.0],
        block.array.clone(),
        block.grid,
        traces,
    );
    let reg = RegularizationConfig {
        delta: 0.2,
        ..Default::default()
    };
    let (map1, _) = tlsm_map(&op, &lib2, &reg, 0).unwrap();
    let c = 8.0;
    let (map2, _) = tlsm_map(&op, &lib2.scaled(c), &reg, 0).unwrap();
    assert!(!map1.degenerate);
    for (a, b) in map1.values.iter().zip(&map2.values) {
        assert!(
            (b - a / c).abs() <= 1e-6 * a.abs().max(1e-12),
            "map must scale by 1/c under rhs scaling: {a} vs {b}"
        );
    }
    println!("ACCEPTANCE 10 invariances: PASS");
}
