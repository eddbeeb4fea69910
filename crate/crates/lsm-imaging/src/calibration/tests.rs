use super::*;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

const C_L: f64 = 6580.0;
const C_S: f64 = 3211.0;
const H: f64 = 3e-3;

// --- rayleigh_speed ----------------------------------------------------------

#[test]
fn rayleigh_speed_matches_frozen_oracle_value() {
    // Pinned by an independent high-precision bisection of the secular
    // equation (also checked against the rationalized cubic form).
    let c_r = rayleigh_speed(C_L, C_S).unwrap();
    assert!(
        (c_r - 2.999332070614e3).abs() < 1e-6,
        "c_R = {c_r:.9}"
    );
}

#[test]
fn rayleigh_residual_below_1e12() {
    for (cl, cs) in [(6580.0, 3211.0), (5900.0, 3200.0), (2000.0, 900.0)] {
        let c_r = rayleigh_speed(cl, cs).unwrap();
        let res = rayleigh_residual(c_r, cl, cs);
        assert!(res.abs() <= 1e-12, "residual {res:e} for ({cl}, {cs})");
    }
}

#[test]
fn rayleigh_root_bracketed_below_shear() {
    for (cl, cs) in [(6580.0, 3211.0), (6000.0, 2500.0), (4000.0, 2300.0)] {
        let c_r = rayleigh_speed(cl, cs).unwrap();
        assert!(0.85 * cs < c_r && c_r < cs, "c_R = {c_r} for c_S = {cs}");
    }
}

#[test]
fn rayleigh_speed_is_homogeneous() {
    let base = rayleigh_speed(C_L, C_S).unwrap();
    let scaled = rayleigh_speed(1.7 * C_L, 1.7 * C_S).unwrap();
    assert!((scaled - 1.7 * base).abs() / base < 1e-10);
}

#[test]
fn rayleigh_rejects_bad_ordering() {
    assert!(matches!(
        rayleigh_speed(3000.0, 3211.0),
        Err(CalError::Parameter(_))
    ));
}

// --- predict_arrival -----------------------------------------------------------

#[test]
fn normal_incidence_echoes() {
    let ll = predict_arrival(ArrivalMode::Ll, 0.0, C_L, C_S, H).unwrap();
    assert!((ll - 2.0 * H / C_L).abs() < 1e-18);
    // 2·3mm/6580 m/s = 0.9119 µs, evaluated independently.
    assert!((ll - 9.1185e-7).abs() / 9.1185e-7 < 1e-4);
    let ls = predict_arrival(ArrivalMode::Ls, 0.0, C_L, C_S, H).unwrap();
    assert!((ls - (H / C_L + H / C_S)).abs() < 1e-15);
}

#[test]
fn mixed_path_bounded_by_pure_paths() {
    for d in [0.0, 1e-3, 3e-3, 8e-3, 20e-3] {
        let t_ll = predict_arrival(ArrivalMode::Ll, d, C_L, C_S, H).unwrap();
        let t_ls = predict_arrival(ArrivalMode::Ls, d, C_L, C_S, H).unwrap();
        let t_ss = predict_arrival(ArrivalMode::Ss, d, C_L, C_S, H).unwrap();
        assert!(
            t_ll <= t_ls + 1e-15 && t_ls <= t_ss + 1e-15,
            "d={d}: LL {t_ll} LS {t_ls} SS {t_ss}"
        );
    }
}

#[test]
fn ls_path_beats_fixed_bounce_points() {
    // Fermat outcome: the minimized LS arrival is no slower than any fixed
    // conversion point.
    let d = 6e-3;
    let t_ls = predict_arrival(ArrivalMode::Ls, d, C_L, C_S, H).unwrap();
    for k in 0..=20 {
        let s = d * k as f64 / 20.0;
        let t = (H * H + s * s).sqrt() / C_L + (H * H + (d - s) * (d - s)).sqrt() / C_S;
        assert!(t_ls <= t + 1e-12);
    }
}

// --- fit_background --------------------------------------------------------------

fn synthetic_picks(
    c_l: f64,
    c_s: f64,
    h: f64,
    per_mode: usize,
    noise: f64,
    seed: u64,
) -> ArrivalPickSet {
    let geometry = ArrayGeometry::colocated(0.0, 150e-6, 61);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut picks = Vec::new();
    for mode in [
        ArrivalMode::Ssl,
        ArrivalMode::Saw,
        ArrivalMode::Ll,
        ArrivalMode::Ss,
        ArrivalMode::Ls,
    ] {
        for k in 0..per_mode {
            // Spread offsets over the aperture, skipping zero offset for
            // the surface modes.
            let src = 5 + (k * 7) % 20;
            let rec = 40 + (k * 3) % 20;
            let d = (geometry.receivers[rec] - geometry.sources[src]).abs();
            let mut t = predict_arrival(mode, d, c_l, c_s, h).unwrap();
            if noise > 0.0 {
                let n = Normal::new(0.0, noise * t).unwrap();
                t += n.sample(&mut rng);
            }
            picks.push(ArrivalPick {
                mode,
                source_index: src,
                receiver_index: rec,
                time: t,
            });
        }
    }
    ArrivalPickSet { picks, geometry }
}

#[test]
fn noiseless_recovery_is_exact() {
    let set = synthetic_picks(C_L, C_S, H, 8, 0.0, 0);
    let fit = fit_background(&set).unwrap();
    assert!((fit.c_l - C_L).abs() / C_L < 1e-9, "c_L = {}", fit.c_l);
    assert!((fit.c_s - C_S).abs() / C_S < 1e-9, "c_S = {}", fit.c_s);
    assert!(
        (fit.thickness - H).abs() / H < 1e-9,
        "h = {}",
        fit.thickness
    );
    for (mode, r) in &fit.residuals {
        assert!(*r < 1e-15, "{} residual {r}", mode.name());
    }
    assert!(fit.ls_verification.unwrap() < 1e-12);
}

#[test]
fn noisy_recovery_within_two_percent() {
    for seed in 0..20 {
        let set = synthetic_picks(C_L, C_S, H, 20, 0.01, seed);
        let fit = fit_background(&set).unwrap();
        assert!(
            (fit.c_l - C_L).abs() / C_L < 0.02,
            "seed {seed}: c_L {}",
            fit.c_l
        );
        assert!(
            (fit.c_s - C_S).abs() / C_S < 0.02,
            "seed {seed}: c_S {}",
            fit.c_s
        );
        assert!(
            (fit.thickness - H).abs() / H < 0.02,
            "seed {seed}: h {}",
            fit.thickness
        );
    }
}

#[test]
fn time_scaling_inverts_speeds_keeps_thickness() {
    let mut set = synthetic_picks(C_L, C_S, H, 10, 0.0, 0);
    let c = 1.6;
    for p in &mut set.picks {
        p.time *= c;
    }
    let fit = fit_background(&set).unwrap();
    assert!((fit.c_l - C_L / c).abs() / (C_L / c) < 1e-9);
    assert!((fit.c_s - C_S / c).abs() / (C_S / c) < 1e-6);
    assert!((fit.thickness - H).abs() / H < 1e-6);
}

#[test]
fn fit_invariant_to_pick_order() {
    let set = synthetic_picks(C_L, C_S, H, 12, 0.005, 3);
    let fit1 = fit_background(&set).unwrap();
    let mut shuffled = set.clone();
    shuffled.picks.reverse();
    shuffled.picks.rotate_left(7);
    let fit2 = fit_background(&shuffled).unwrap();
    assert!((fit1.c_l - fit2.c_l).abs() / fit1.c_l < 1e-12);
    assert!((fit1.c_s - fit2.c_s).abs() / fit1.c_s < 1e-12);
    assert!((fit1.thickness - fit2.thickness).abs() / fit1.thickness < 1e-12);
}

#[test]
fn insufficient_picks_rejected() {
    let mut set = synthetic_picks(C_L, C_S, H, 4, 0.0, 0);
    set.picks.retain(|p| p.mode != ArrivalMode::Ssl);
    assert!(matches!(fit_background(&set), Err(CalError::Fit(_))));
    let mut set = synthetic_picks(C_L, C_S, H, 4, 0.0, 0);
    set.picks
        .retain(|p| !matches!(p.mode, ArrivalMode::Ll | ArrivalMode::Ss));
    assert!(matches!(fit_background(&set), Err(CalError::Fit(_))));
}

#[test]
fn pick_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("picks.csv");
    let set = synthetic_picks(C_L, C_S, H, 3, 0.0, 0);
    write_picks_csv(&set, &path).unwrap();
    let read = read_picks_csv(&path, set.geometry.clone()).unwrap();
    assert_eq!(read.picks.len(), set.picks.len());
    for (a, b) in read.picks.iter().zip(&set.picks) {
        assert_eq!(a.mode, b.mode);
        assert_eq!(a.source_index, b.source_index);
        assert_eq!(a.receiver_index, b.receiver_index);
        assert!((a.time - b.time).abs() <= 1e-18 + 1e-12 * b.time);
    }
}

#[test]
fn pick_csv_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("picks.csv");
    std::fs::write(&path, "mode,source_index,receiver_index,time_s\nXX,0,0,1e-6\n").unwrap();
    let geom = ArrayGeometry::colocated(0.0, 150e-6, 4);
    assert!(matches!(
        read_picks_csv(&path, geom),
        Err(CalError::PickFile(_))
    ));
}
