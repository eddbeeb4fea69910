//! Pipeline commands: simulate, scatter, library, invert, metric,
//! threshold, render, sweep, calibrate. Each is idempotent given identical
//! inputs, and every consumer verifies the manifest before computing.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use super::manifest::Manifest;
use super::CliError;
use crate::calibration::{fit_background, read_picks_csv, BackgroundFit};
use crate::dataops::{
    self, io as dio, scattered_field, spectra, BlockKind, WaveformBlock,
};
use crate::imaging::{contrast_metric, make_disk_masks, render_binary, render_map, threshold_map};
use crate::inversion::{
    export_map_csv, export_records_csv, lsm_map, read_map, tlsm_map, write_map, IndicatorMap,
    MapDomain, NearFieldOperatorFreq, NearFieldOperatorTime, RegularizationConfig, SolveRecord,
};
use crate::triallib::{self, build_freq_library, build_library_reciprocal, build_time_library};
use crate::wavesim::record_traces;

pub const FREE_FILE: &str = "free.luwf";
pub const TOTAL_FILE: &str = "total.luwf";
pub const SCATTERED_FILE: &str = "scattered.luwf";
pub const LIBRARY_FILE: &str = "library_time.luwf";

pub fn map_file(domain: MapDomain, t_select: f64) -> String {
    format!("map_{}_T{}.lump", domain_tag(domain), nanos(t_select))
}

pub fn records_file(domain: MapDomain, t_select: f64) -> String {
    format!("records_{}_T{}.csv", domain_tag(domain), nanos(t_select))
}

pub fn report_file(domain: MapDomain, t_select: f64) -> String {
    format!("report_{}_T{}.json", domain_tag(domain), nanos(t_select))
}

fn domain_tag(domain: MapDomain) -> &'static str {
    match domain {
        MapDomain::Time => "time",
        MapDomain::Freq => "freq",
    }
}

fn nanos(t: f64) -> u64 {
    (t * 1e9).round() as u64
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.paths.out_dir.clone();
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Config(format!("cannot create out_dir {}: {e}", dir.display())))?;
    Ok(dir)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub simulations: usize,
    pub n_t: usize,
    pub wall_seconds: f64,
    pub warnings: Vec<String>,
}

/// Run the array protocol on the defective and intact models and persist
/// the total and free fields.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateSummary, CliError> {
    let start = Instant::now();
    let dir = out_dir(cfg)?;
    let model = cfg.model();
    let background = cfg.background();
    let array = cfg.array_geometry();
    let grid = cfg.time_grid();
    let backend = cfg.run.backend;

    // One job per (model, source position); both specimens share the pool.
    let jobs: Vec<(bool, usize)> = (0..array.n_sources())
        .map(|i| (true, i))
        .chain((0..array.n_sources()).map(|i| (false, i)))
        .collect();
    let results: Vec<(bool, usize, crate::wavesim::SimResult)> = jobs
        .par_iter()
        .map(|&(defective, i)| {
            let m = if defective { &model } else { &background };
            let src = cfg.laser_at(array.sources[i]);
            record_traces(m, &src, &array, &grid, backend).map(|r| (defective, i, r))
        })
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut total = WaveformBlock::zeros(array.clone(), grid, BlockKind::Total);
    let mut free = WaveformBlock::zeros(array.clone(), grid, BlockKind::Free);
    let mut warnings = Vec::new();
    for (defective, i, res) in results {
        let block = if defective { &mut total } else { &mut free };
        for m in 0..array.n_receivers() {
            block.trace_mut(m, i).copy_from_slice(&res.traces[m]);
        }
        warnings.extend(res.warnings);
    }
    warnings.sort();
    warnings.dedup();

    let mut manifest = Manifest::new(cfg.hash());
    manifest.simulations = 2 * array.n_sources();
    if cfg.run.noise_level > 0.0 {
        manifest.noise_level = cfg.run.noise_level;
        manifest.noise_sigma = cfg.run.noise_level * total.rms();
        total = dataops::add_noise(&total, cfg.run.noise_level, cfg.run.seed)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        free = dataops::add_noise(&free, cfg.run.noise_level, cfg.run.seed.wrapping_add(1))
            .map_err(|e| CliError::Numerical(e.to_string()))?;
    }

    dio::write_dataset(&total, &dir.join(TOTAL_FILE))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    dio::write_dataset(&free, &dir.join(FREE_FILE))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    manifest.record(&dir, TOTAL_FILE)?;
    manifest.record(&dir, FREE_FILE)?;
    manifest.save(&dir)?;
    Ok(SimulateSummary {
        simulations: manifest.simulations,
        n_t: grid.n_t,
        wall_seconds: start.elapsed().as_secs_f64(),
        warnings,
    })
}

// ---------------------------------------------------------------------------
// scatter
// ---------------------------------------------------------------------------

/// Subtract the free field and band-pass the result.
pub fn cmd_scatter(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = out_dir(cfg)?;
    let mut manifest = Manifest::load(&dir)?;
    manifest.check_config(cfg.hash())?;
    manifest.verify(&dir, TOTAL_FILE)?;
    manifest.verify(&dir, FREE_FILE)?;

    let total = dio::read_dataset(&dir.join(TOTAL_FILE))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let free = dio::read_dataset(&dir.join(FREE_FILE))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let v = scattered_field(&total, &free).map_err(|e| CliError::Numerical(e.to_string()))?;
    let v = dataops::bandpass(&v, cfg.band.f_lo, cfg.band.f_hi)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    dio::write_dataset(&v, &dir.join(SCATTERED_FILE))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    manifest.record(&dir, SCATTERED_FILE)?;
    manifest.save(&dir)
}

// ---------------------------------------------------------------------------
// library
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct LibrarySummary {
    pub simulations: usize,
    pub method: String,
    pub patterns: usize,
    pub wall_seconds: f64,
}

/// Build the time-domain trial library on the intact background, band-pass
/// it like the data, and persist it.
pub fn cmd_library_time(cfg: &RunConfig) -> Result<LibrarySummary, CliError> {
    let start = Instant::now();
    let dir = out_dir(cfg)?;
    let background = cfg.background();
    let grid = cfg.sampling_grid();
    let trial = cfg.trial_config();
    let array = cfg.array_geometry();
    let tg = cfg.time_grid();
    let backend = cfg.run.backend;

    let (lib, stats) = match cfg.trial.method.as_str() {
        "direct" => build_time_library(&background, &grid, &trial, &array, &tg, backend),
        _ => build_library_reciprocal(&background, &grid, &trial, &array, &tg, backend),
    }
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    let lib = lib
        .bandpassed(cfg.band.f_lo, cfg.band.f_hi)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    triallib::io::write_time_library(&lib, &dir.join(LIBRARY_FILE))
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut manifest = match Manifest::load(&dir) {
        Ok(m) => {
            m.check_config(cfg.hash())?;
            m
        }
        Err(_) => Manifest::new(cfg.hash()),
    };
    manifest.record(&dir, LIBRARY_FILE)?;
    manifest.save(&dir)?;
    Ok(LibrarySummary {
        simulations: stats.simulations,
        method: format!("{:?}", stats.method).to_lowercase(),
        patterns: grid.n_points() * trial.n_p,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Persist the frequency form of the library for a reconstruction period.
pub fn cmd_library_freq(cfg: &RunConfig, t_select: f64) -> Result<(), CliError> {
    let dir = out_dir(cfg)?;
    let mut manifest = Manifest::load(&dir)?;
    manifest.check_config(cfg.hash())?;
    manifest.verify(&dir, LIBRARY_FILE)?;
    let lib = triallib::io::read_time_library(&dir.join(LIBRARY_FILE))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let n_t = cfg.n_t_for(t_select)?;
    let flib = build_freq_library(
        &lib,
        (cfg.band.f_lo, cfg.band.f_hi),
        cfg.band.n_omega,
        cfg.band.tukey,
        n_t,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    let name = format!("library_freq_T{}.luwf", nanos(t_select));
    triallib::io::write_freq_library(&flib, &dir.join(&name))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    manifest.record(&dir, &name)?;
    manifest.save(&dir)
}

// ---------------------------------------------------------------------------
// invert
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct InvertReport {
    pub domain: String,
    pub t_select: f64,
    pub n_t: usize,
    pub delta_effective: f64,
    pub wall_seconds: f64,
    pub solves: usize,
    pub saturated_fraction: f64,
    pub eta_min: f64,
    pub eta_median: f64,
    pub eta_max: f64,
    pub degenerate: bool,
    pub config_hash: String,
}

fn eta_stats(records: &[SolveRecord]) -> (f64, f64, f64, f64) {
    if records.is_empty() {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let mut etas: Vec<f64> = records.iter().map(|r| r.eta).collect();
    etas.sort_by(|a, b| a.partial_cmp(b).expect("finite η"));
    let saturated = records.iter().filter(|r| r.saturated).count();
    (
        etas[0],
        etas[etas.len() / 2],
        etas[etas.len() - 1],
        saturated as f64 / records.len() as f64,
    )
}

/// Noise-aware discrepancy level: the configured δ, or the estimated
/// noise-to-signal ratio of the band-passed scattered field when the
/// datasets carry synthetic noise.
fn effective_delta(cfg: &RunConfig, manifest: &Manifest, v: &WaveformBlock) -> f64 {
    if manifest.noise_sigma <= 0.0 {
        return cfg.regularization.delta;
    }
    // White noise through the band-pass keeps roughly the band fraction of
    // its power; the subtraction of two noisy fields doubles it.
    let band_fraction = 2.0 * v.grid.dt * (cfg.band.f_hi - cfg.band.f_lo);
    let sigma_v = (2.0_f64).sqrt() * manifest.noise_sigma * band_fraction.sqrt();
    let rms = v.rms();
    if rms <= 0.0 {
        return cfg.regularization.delta;
    }
    (sigma_v / rms).clamp(cfg.regularization.delta, 0.9)
}

/// Assemble the operator for the selected period and produce the map.
pub fn cmd_invert(
    cfg: &RunConfig,
    domain: MapDomain,
    t_select: f64,
) -> Result<InvertReport, CliError> {
    let start = Instant::now();
    let dir = out_dir(cfg)?;
    let mut manifest = Manifest::load(&dir)?;
    manifest.check_config(cfg.hash())?;
    manifest.verify(&dir, SCATTERED_FILE)?;
    manifest.verify(&dir, LIBRARY_FILE)?;

    let scattered = dio::read_dataset(&dir.join(SCATTERED_FILE))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let lib = triallib::io::read_time_library(&dir.join(LIBRARY_FILE))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    if lib.background_hash != triallib::background_hash(&cfg.background()) {
        return Err(CliError::Stale(
            "library was built for a different background model".into(),
        ));
    }
    let n_t = cfg.n_t_for(t_select)?;
    let truncated = scattered
        .truncated(n_t)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let delta = effective_delta(cfg, &manifest, &truncated);
    let reg = RegularizationConfig {
        delta,
        ..cfg.regularization
    };

    let (map, records) = match domain {
        MapDomain::Time => {
            let op = NearFieldOperatorTime::new(&scattered, n_t)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            tlsm_map(&op, &lib, &reg, cfg.hash())
                .map_err(|e| CliError::Numerical(e.to_string()))?
        }
        MapDomain::Freq => {
            let sp = spectra(
                &truncated,
                cfg.band.tukey,
                (cfg.band.f_lo, cfg.band.f_hi),
                cfg.band.n_omega,
            )
            .map_err(|e| CliError::Numerical(e.to_string()))?;
            let op = NearFieldOperatorFreq::new(&sp, &truncated.array)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let flib = build_freq_library(
                &lib,
                (cfg.band.f_lo, cfg.band.f_hi),
                cfg.band.n_omega,
                cfg.band.tukey,
                n_t,
            )
            .map_err(|e| CliError::Numerical(e.to_string()))?;
            lsm_map(&op, &flib, &reg, cfg.hash())
                .map_err(|e| CliError::Numerical(e.to_string()))?
        }
    };

    let map_name = map_file(domain, t_select);
    write_map(&map, &dir.join(&map_name)).map_err(|e| CliError::Numerical(e.to_string()))?;
    export_map_csv(&map, &dir.join(format!("{map_name}.csv")))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let rec_name = records_file(domain, t_select);
    export_records_csv(&records, &dir.join(&rec_name))
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let (eta_min, eta_median, eta_max, saturated_fraction) = eta_stats(&records);
    let report = InvertReport {
        domain: domain_tag(domain).to_string(),
        t_select,
        n_t,
        delta_effective: delta,
        wall_seconds: start.elapsed().as_secs_f64(),
        solves: records.len(),
        saturated_fraction,
        eta_min,
        eta_median,
        eta_max,
        degenerate: map.degenerate,
        config_hash: format!("{:016x}", cfg.hash()),
    };
    let rep_name = report_file(domain, t_select);
    std::fs::write(
        dir.join(&rep_name),
        serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Numerical(e.to_string()))?,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    manifest.record(&dir, &map_name)?;
    manifest.record(&dir, &rec_name)?;
    manifest.record(&dir, &rep_name)?;
    manifest.save(&dir)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// metric / threshold / render
// ---------------------------------------------------------------------------

fn load_map(cfg: &RunConfig, domain: MapDomain, t_select: f64) -> Result<IndicatorMap, CliError> {
    let dir = out_dir(cfg)?;
    let manifest = Manifest::load(&dir)?;
    manifest.check_config(cfg.hash())?;
    let name = map_file(domain, t_select);
    manifest.verify(&dir, &name)?;
    let map = read_map(&dir.join(name)).map_err(|e| CliError::Numerical(e.to_string()))?;
    if map.config_hash != cfg.hash() {
        return Err(CliError::Stale(
            "map embeds a different config hash".into(),
        ));
    }
    Ok(map)
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub domain: String,
    pub t_select: f64,
    pub contrast: f64,
    pub dilation: f64,
    pub gap: f64,
    pub defect_cells: usize,
    pub background_cells: usize,
}

/// Contrast metric of a persisted map against the configured defects.
pub fn cmd_metric(
    cfg: &RunConfig,
    domain: MapDomain,
    t_select: f64,
) -> Result<MetricReport, CliError> {
    let map = load_map(cfg, domain, t_select)?;
    let mask = make_disk_masks(
        &map.grid,
        &cfg.material.voids,
        cfg.metric.dilation,
        cfg.metric.gap,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let contrast = contrast_metric(&map, &mask).map_err(|e| CliError::Numerical(e.to_string()))?;
    let report = MetricReport {
        domain: domain_tag(domain).to_string(),
        t_select,
        contrast,
        dilation: cfg.metric.dilation,
        gap: cfg.metric.gap,
        defect_cells: mask.defect.len(),
        background_cells: mask.background.len(),
    };
    let dir = out_dir(cfg)?;
    let name = format!("metric_{}_T{}.json", domain_tag(domain), nanos(t_select));
    std::fs::write(
        dir.join(name),
        serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Numerical(e.to_string()))?,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(report)
}

/// 60%-style thresholded map rendered as a binary graymap.
pub fn cmd_threshold(cfg: &RunConfig, domain: MapDomain, t_select: f64) -> Result<(), CliError> {
    let map = load_map(cfg, domain, t_select)?;
    let binary = threshold_map(&map, cfg.metric.threshold)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let dir = out_dir(cfg)?;
    let name = format!(
        "threshold_{}_T{}.pgm",
        domain_tag(domain),
        nanos(t_select)
    );
    render_binary(&binary, &dir.join(name)).map_err(|e| CliError::Numerical(e.to_string()))
}

/// Render a persisted map as a 16-bit graymap.
pub fn cmd_render(cfg: &RunConfig, domain: MapDomain, t_select: f64) -> Result<(), CliError> {
    let map = load_map(cfg, domain, t_select)?;
    let dir = out_dir(cfg)?;
    let name = format!("map_{}_T{}.pgm", domain_tag(domain), nanos(t_select));
    render_map(&map, &dir.join(name)).map_err(|e| CliError::Numerical(e.to_string()))
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Hyperparameter axis for sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Np,
    T0,
    T,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<SweepAxis> {
        Some(match s.to_ascii_lowercase().as_str() {
            "np" | "n_p" => SweepAxis::Np,
            "t0" => SweepAxis::T0,
            "t" => SweepAxis::T,
            _ => return None,
        })
    }

    fn tag(&self) -> &'static str {
        match self {
            SweepAxis::Np => "np",
            SweepAxis::T0 => "t0",
            SweepAxis::T => "T",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub axis: String,
    pub values: Vec<f64>,
    pub tlsm: Vec<f64>,
    pub lsm: Vec<f64>,
}

/// Contrast table over one hyperparameter, Tables I–VI style: rows are the
/// indicators, columns the swept values. Maps are persisted per value and
/// the table entries are reproducible from those files.
pub fn cmd_sweep(cfg: &RunConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepTable, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let dir = out_dir(cfg)?;
    let mut manifest = Manifest::load(&dir)?;
    manifest.check_config(cfg.hash())?;
    manifest.verify(&dir, SCATTERED_FILE)?;
    manifest.verify(&dir, LIBRARY_FILE)?;
    let scattered = dio::read_dataset(&dir.join(SCATTERED_FILE))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let base_lib = triallib::io::read_time_library(&dir.join(LIBRARY_FILE))
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut tlsm = Vec::with_capacity(values.len());
    let mut lsm = Vec::with_capacity(values.len());
    for &value in values {
        // Resolve the library variant and reconstruction period this
        // column needs. The time axis reuses the base library; the outset
        // axis shifts it; the polarization axis subsets it when the counts
        // nest and rebuilds it otherwise.
        let (lib, t_select) = match axis {
            SweepAxis::T => (base_lib.clone(), value),
            SweepAxis::T0 => {
                let mut lib = base_lib.clone();
                lib.config.outsets = vec![value];
                lib.config
                    .validate(&cfg.time_grid())
                    .map_err(|e| CliError::Config(e.to_string()))?;
                (lib, default_t_select(cfg))
            }
            SweepAxis::Np => {
                let np = value.round() as usize;
                if np == 0 || (value - np as f64).abs() > 1e-9 {
                    return Err(CliError::Config(format!(
                        "Np sweep values must be positive integers, got {value}"
                    )));
                }
                let lib = match base_lib.polarization_subset(np) {
                    Some(sub) => sub,
                    None => {
                        let mut trial = cfg.trial_config();
                        trial.n_p = np;
                        let (lib, _) = build_library_reciprocal(
                            &cfg.background(),
                            &cfg.sampling_grid(),
                            &trial,
                            &cfg.array_geometry(),
                            &cfg.time_grid(),
                            cfg.run.backend,
                        )
                        .map_err(|e| CliError::Numerical(e.to_string()))?;
                        lib.bandpassed(cfg.band.f_lo, cfg.band.f_hi)
                            .map_err(|e| CliError::Numerical(e.to_string()))?
                    }
                };
                (lib, default_t_select(cfg))
            }
        };

        let n_t = cfg.n_t_for(t_select)?;
        let truncated = scattered
            .truncated(n_t)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let delta = effective_delta(cfg, &manifest, &truncated);
        let reg = RegularizationConfig {
            delta,
            ..cfg.regularization
        };
        let mask = make_disk_masks(
            &lib.grid,
            &cfg.material.voids,
            cfg.metric.dilation,
            cfg.metric.gap,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;

        for domain in [MapDomain::Time, MapDomain::Freq] {
            let (map, _) = match domain {
                MapDomain::Time => {
                    let op = NearFieldOperatorTime::new(&scattered, n_t)
                        .map_err(|e| CliError::Numerical(e.to_string()))?;
                    tlsm_map(&op, &lib, &reg, cfg.hash())
                        .map_err(|e| CliError::Numerical(e.to_string()))?
                }
                MapDomain::Freq => {
                    let sp = spectra(
                        &truncated,
                        cfg.band.tukey,
                        (cfg.band.f_lo, cfg.band.f_hi),
                        cfg.band.n_omega,
                    )
                    .map_err(|e| CliError::Numerical(e.to_string()))?;
                    let op = NearFieldOperatorFreq::new(&sp, &truncated.array)
                        .map_err(|e| CliError::Numerical(e.to_string()))?;
                    let flib = build_freq_library(
                        &lib,
                        (cfg.band.f_lo, cfg.band.f_hi),
                        cfg.band.n_omega,
                        cfg.band.tukey,
                        n_t,
                    )
                    .map_err(|e| CliError::Numerical(e.to_string()))?;
                    lsm_map(&op, &flib, &reg, cfg.hash())
                        .map_err(|e| CliError::Numerical(e.to_string()))?
                }
            };
            let name = sweep_map_file(axis, value, domain, t_select);
            write_map(&map, &dir.join(&name))
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            manifest.record(&dir, &name)?;
            let contrast =
                contrast_metric(&map, &mask).map_err(|e| CliError::Numerical(e.to_string()))?;
            match domain {
                MapDomain::Time => tlsm.push(contrast),
                MapDomain::Freq => lsm.push(contrast),
            }
        }
    }

    let table = SweepTable {
        axis: axis.tag().to_string(),
        values: values.to_vec(),
        tlsm: tlsm.clone(),
        lsm: lsm.clone(),
    };
    let mut csv = String::from("indicator");
    for v in values {
        csv.push_str(&format!(",{}={v:e}", axis.tag()));
    }
    csv.push('\n');
    csv.push_str("TLSM");
    for v in &tlsm {
        csv.push_str(&format!(",{v:.6}"));
    }
    csv.push('\n');
    csv.push_str("LSM");
    for v in &lsm {
        csv.push_str(&format!(",{v:.6}"));
    }
    csv.push('\n');
    let csv_name = format!("sweep_{}.csv", axis.tag());
    std::fs::write(dir.join(&csv_name), csv)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    manifest.record(&dir, &csv_name)?;
    manifest.save(&dir)?;
    Ok(table)
}

/// Map artifact name for a sweep column. The time axis shares the plain
/// invert naming so a one-value sweep equals a direct invert run.
pub fn sweep_map_file(axis: SweepAxis, value: f64, domain: MapDomain, t_select: f64) -> String {
    match axis {
        SweepAxis::T => map_file(domain, t_select),
        SweepAxis::T0 => format!(
            "map_{}_t0{}_T{}.lump",
            domain_tag(domain),
            nanos(value),
            nanos(t_select)
        ),
        SweepAxis::Np => format!(
            "map_{}_np{}_T{}.lump",
            domain_tag(domain),
            value.round() as usize,
            nanos(t_select)
        ),
    }
}

/// Default reconstruction period: the longest configured selection, or the
/// full record when none is configured.
fn default_t_select(cfg: &RunConfig) -> f64 {
    cfg.time
        .t_select
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(f64::NEG_INFINITY)
        .max(if cfg.time.t_select.is_empty() {
            cfg.time.t_total
        } else {
            f64::NEG_INFINITY
        })
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

/// Identify background parameters from an arrival-pick file.
pub fn cmd_calibrate(cfg: &RunConfig, picks: &Path) -> Result<BackgroundFit, CliError> {
    let set = read_picks_csv(picks, cfg.array_geometry())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let fit = fit_background(&set).map_err(|e| CliError::Numerical(e.to_string()))?;
    let dir = out_dir(cfg)?;
    #[derive(Serialize)]
    struct FitReport {
        c_l: f64,
        c_s: f64,
        c_r: f64,
        thickness: f64,
        residuals: Vec<(String, f64)>,
        ls_verification: Option<f64>,
    }
    let report = FitReport {
        c_l: fit.c_l,
        c_s: fit.c_s,
        c_r: fit.c_r,
        thickness: fit.thickness,
        residuals: fit
            .residuals
            .iter()
            .map(|(m, r)| (m.name().to_string(), *r))
            .collect(),
        ls_verification: fit.ls_verification,
    };
    std::fs::write(
        dir.join("calibration.json"),
        serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Numerical(e.to_string()))?,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(fit)
}

