//! Command-line orchestration of the imaging pipeline.
//!
//! One TOML configuration drives every subcommand; artifacts land under
//! the configured output directory and carry the config hash through a
//! manifest, so stale files are rejected before any computation starts.
//!
//! Exit codes: 0 success, 2 configuration error, 3 stale artifact,
//! 4 numerical failure.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use commands::SweepAxis;
pub use config::RunConfig;
pub use manifest::Manifest;

use crate::inversion::MapDomain;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stale artifact: {0}")]
    Stale(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stale(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Domain {
    Time,
    Freq,
}

impl From<Domain> for MapDomain {
    fn from(d: Domain) -> MapDomain {
        match d {
            Domain::Time => MapDomain::Time,
            Domain::Freq => MapDomain::Freq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Np,
    T0,
    T,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> SweepAxis {
        match a {
            AxisArg::Np => SweepAxis::Np,
            AxisArg::T0 => SweepAxis::T0,
            AxisArg::T => SweepAxis::T,
        }
    }
}

/// Subsurface imaging pipeline driver.
#[derive(Debug, Parser)]
#[command(name = "lsm", version, about)]
pub struct Cli {
    /// Experiment configuration file.
    #[arg(long, global = true, default_value = "lsm.toml")]
    pub config: PathBuf,
    /// Worker-thread cap (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the defective and intact specimens over the array.
    Simulate,
    /// Form the band-passed scattered field from total and free data.
    Scatter,
    /// Build the trial-signature library.
    Library {
        #[arg(long, value_enum)]
        domain: Domain,
        /// Reconstruction period for the frequency form, seconds.
        #[arg(long = "T")]
        t_select: Option<f64>,
    },
    /// Solve the scattering equations and write an indicator map.
    Invert {
        #[arg(long, value_enum)]
        domain: Domain,
        /// Reconstruction period, seconds.
        #[arg(long = "T")]
        t_select: f64,
    },
    /// Contrast metric of a persisted map.
    Metric {
        #[arg(long, value_enum)]
        domain: Domain,
        #[arg(long = "T")]
        t_select: f64,
    },
    /// Threshold a persisted map at the configured fraction.
    Threshold {
        #[arg(long, value_enum)]
        domain: Domain,
        #[arg(long = "T")]
        t_select: f64,
    },
    /// Render a persisted map as a 16-bit graymap.
    Render {
        #[arg(long, value_enum)]
        domain: Domain,
        #[arg(long = "T")]
        t_select: f64,
    },
    /// Contrast table over one hyperparameter axis.
    Sweep {
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Swept values (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Identify background parameters from an arrival-pick file.
    Calibrate {
        /// CSV with columns mode,source_index,receiver_index,time_s.
        #[arg(long)]
        picks: PathBuf,
    },
}

/// Run a parsed invocation; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads > 0 {
            // Ignore failure: the global pool may already exist in-process.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.paths.out_dir = out;
    }
    if cli.threads.is_none() && cfg.run.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global();
    }

    match cli.command {
        Command::Simulate => {
            let s = commands::cmd_simulate(&cfg)?;
            println!(
                "simulate: {} runs, {} samples each, {:.1} s",
                s.simulations, s.n_t, s.wall_seconds
            );
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
        Command::Scatter => {
            commands::cmd_scatter(&cfg)?;
            println!("scatter: wrote {}", commands::SCATTERED_FILE);
            Ok(())
        }
        Command::Library { domain, t_select } => match domain {
            Domain::Time => {
                let s = commands::cmd_library_time(&cfg)?;
                println!(
                    "library: {} patterns from {} {} runs, {:.1} s",
                    s.patterns, s.simulations, s.method, s.wall_seconds
                );
                Ok(())
            }
            Domain::Freq => {
                let t = t_select.ok_or_else(|| {
                    CliError::Config("library --domain freq needs --T <seconds>".into())
                })?;
                commands::cmd_library_freq(&cfg, t)
            }
        },
        Command::Invert { domain, t_select } => {
            let r = commands::cmd_invert(&cfg, domain.into(), t_select)?;
            println!(
                "invert {}: {} solves, δ = {:.2e}, η ∈ [{:.2e}, {:.2e}], {:.0}% saturated, {:.1} s",
                r.domain,
                r.solves,
                r.delta_effective,
                r.eta_min,
                r.eta_max,
                100.0 * r.saturated_fraction,
                r.wall_seconds
            );
            if r.degenerate {
                eprintln!("warning: map is degenerate (no resolvable signal)");
            }
            Ok(())
        }
        Command::Metric { domain, t_select } => {
            let m = commands::cmd_metric(&cfg, domain.into(), t_select)?;
            println!("contrast({}, T={:.3e}) = {:.3}", m.domain, m.t_select, m.contrast);
            Ok(())
        }
        Command::Threshold { domain, t_select } => {
            commands::cmd_threshold(&cfg, domain.into(), t_select)
        }
        Command::Render { domain, t_select } => {
            commands::cmd_render(&cfg, domain.into(), t_select)
        }
        Command::Sweep { axis, values } => {
            let t = commands::cmd_sweep(&cfg, axis.into(), &values)?;
            println!("sweep over {}: TLSM {:?} LSM {:?}", t.axis, t.tlsm, t.lsm);
            Ok(())
        }
        Command::Calibrate { picks } => {
            let fit = commands::cmd_calibrate(&cfg, &picks)?;
            println!(
                "calibrate: c_L = {:.1} m/s, c_S = {:.1} m/s, c_R = {:.1} m/s, h = {:.4e} m",
                fit.c_l, fit.c_s, fit.c_r, fit.thickness
            );
            Ok(())
        }
    }
}
