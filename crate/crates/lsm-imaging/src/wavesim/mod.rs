//! 2D forward wave solver producing array waveform data.
//!
//! Two backends share one interface: an elastic P-SV velocity-stress
//! staggered-grid scheme (2nd order in time, 4th order in space) and a
//! scalar counterpart on the same layout. Voids are vacuum cells, so their
//! boundaries behave traction-free; absorbing edges use an
//! exponential-taper sponge whose damping exponent grows quadratically
//! with depth into the layer.
//!
//! The discrete force-to-motion map of both backends is exactly symmetric
//! (including sponge damping), so source/receiver reciprocity holds to
//! machine precision. The trial-signature library leans on this.

mod elastic;
mod grid;
pub mod model;
pub mod source;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use model::{BoundarySpec, CircularVoid, EdgeCondition, MaterialModel2D};
pub use source::{laser_source_profile, SourceSpec};

use elastic::ElasticSim;
use grid::{Lattice, SimGrid, Stencil4};
use scalar::ScalarSim;

mod scalar;

/// Simulation failure modes.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("unstable time step: {0}")]
    Stability(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("material error: {0}")]
    Material(String),
    #[error("source error: {0}")]
    Source(String),
    #[error("time alignment error: {0}")]
    Alignment(String),
}

/// Which solver realizes the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Single wave speed (the model's c_L) on the same staggered layout.
    Scalar,
    /// Coupled P-SV elastodynamics.
    Elastic,
}

/// Uniform recording grid: samples at t_k = k·dt for k = 1..=n_t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_t: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_t: usize) -> Result<TimeGrid, SimError> {
        if !(dt > 0.0) {
            return Err(SimError::Alignment(format!("dt must be positive, got {dt}")));
        }
        if n_t == 0 {
            return Err(SimError::Alignment("n_t must be at least 1".into()));
        }
        Ok(TimeGrid { dt, n_t })
    }

    /// Total record period T = n_t·dt.
    pub fn total(&self) -> f64 {
        self.dt * self.n_t as f64
    }

    /// Sample instants t_k, k = 1..=n_t.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let dt = self.dt;
        (1..=self.n_t).map(move |k| k as f64 * dt)
    }
}

/// Source and receiver positions (x, in m) on the top surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub sources: Vec<f64>,
    pub receivers: Vec<f64>,
}

impl ArrayGeometry {
    /// Colocated sources and receivers: `count` positions spaced `pitch`
    /// around `center`.
    pub fn colocated(center: f64, pitch: f64, count: usize) -> ArrayGeometry {
        let half = (count as f64 - 1.0) / 2.0;
        let xs: Vec<f64> = (0..count)
            .map(|i| center + (i as f64 - half) * pitch)
            .collect();
        ArrayGeometry {
            sources: xs.clone(),
            receivers: xs,
        }
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, xs) in [("sources", &self.sources), ("receivers", &self.receivers)] {
            if xs.is_empty() {
                return Err(SimError::Geometry(format!("{name} must not be empty")));
            }
            if xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(SimError::Geometry(format!(
                    "{name} must be strictly increasing along the surface"
                )));
            }
        }
        Ok(())
    }
}

/// Recorded quantity at a probe position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// Horizontal displacement (elastic backend).
    Horizontal,
    /// Vertical displacement (elastic backend).
    Vertical,
    /// Field value (scalar backend).
    Field,
}

/// A recording point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub x: f64,
    pub z: f64,
    pub component: Component,
}

impl Probe {
    /// The backend's natural receiver recording at a surface position.
    pub fn receiver(x: f64, backend: Backend) -> Probe {
        Probe {
            x,
            z: 0.0,
            component: match backend {
                Backend::Elastic => Component::Vertical,
                Backend::Scalar => Component::Field,
            },
        }
    }
}

/// Traces and run metadata returned by a simulation.
#[derive(Debug, Clone)]
pub struct SimResult {
    /// One trace per probe/receiver, `n_t` samples each.
    pub traces: Vec<Vec<f64>>,
    /// Non-fatal conditions recorded during the run.
    pub warnings: Vec<String>,
}

/// Fraction of the theoretical limit kept as stability margin.
const CFL_SAFETY: f64 = 0.9;
/// Von Neumann limit of the 4th-order staggered scheme relative to
/// h/(c·√2): the inverse of |c1| + |c2| = 7/6.
const CFL_FOURTH_ORDER: f64 = 6.0 / 7.0;

/// Closed-form stability bound cfl·h/(c·√2).
pub fn cfl_dt(h: f64, c: f64, cfl: f64) -> f64 {
    cfl * h / (c * std::f64::consts::SQRT_2)
}

/// Largest stable time step for the model under the given backend:
/// 0.9 of the 4th-order scheme's von Neumann limit.
pub fn stable_dt(model: &MaterialModel2D, backend: Backend) -> Result<f64, SimError> {
    model.validate()?;
    let c_max = match backend {
        Backend::Elastic | Backend::Scalar => model.c_l,
    };
    Ok(cfl_dt(model.cell_size, c_max, CFL_SAFETY * CFL_FOURTH_ORDER))
}

static SIM_COUNT: AtomicU64 = AtomicU64::new(0);

/// Number of forward simulations run by this process.
pub fn simulation_count() -> u64 {
    SIM_COUNT.load(Ordering::Relaxed)
}

/// Run the model stepping exactly at `grid.dt`, recording the backend's
/// receiver quantity (vertical displacement / field value) at the array's
/// receivers on the surface.
pub fn simulate(
    model: &MaterialModel2D,
    source: &SourceSpec,
    array: &ArrayGeometry,
    grid: &TimeGrid,
    backend: Backend,
) -> Result<SimResult, SimError> {
    array.validate()?;
    let probes: Vec<Probe> = array
        .receivers
        .iter()
        .map(|&x| Probe::receiver(x, backend))
        .collect();
    simulate_probes(model, source, &probes, grid, backend)
}

/// As [`simulate`], recording arbitrary probes instead of the array.
pub fn simulate_probes(
    model: &MaterialModel2D,
    source: &SourceSpec,
    probes: &[Probe],
    grid: &TimeGrid,
    backend: Backend,
) -> Result<SimResult, SimError> {
    let dt_max = stable_dt(model, backend)?;
    if grid.dt > dt_max * (1.0 + 1e-12) {
        return Err(SimError::Stability(format!(
            "dt = {:.4e} s exceeds the stable limit {:.4e} s",
            grid.dt, dt_max
        )));
    }
    run(model, source, probes, grid, 1, backend, None)
}

/// Record traces on `record` while stepping internally at a stable
/// sub-multiple of `record.dt`.
pub fn record_traces(
    model: &MaterialModel2D,
    source: &SourceSpec,
    array: &ArrayGeometry,
    record: &TimeGrid,
    backend: Backend,
) -> Result<SimResult, SimError> {
    array.validate()?;
    let probes: Vec<Probe> = array
        .receivers
        .iter()
        .map(|&x| Probe::receiver(x, backend))
        .collect();
    record_probes(model, source, &probes, record, backend)
}

/// As [`record_traces`] for arbitrary probes.
pub fn record_probes(
    model: &MaterialModel2D,
    source: &SourceSpec,
    probes: &[Probe],
    record: &TimeGrid,
    backend: Backend,
) -> Result<SimResult, SimError> {
    let dt_max = stable_dt(model, backend)?;
    let decim = (record.dt / dt_max).ceil().max(1.0) as usize;
    let step_grid = TimeGrid {
        dt: record.dt / decim as f64,
        n_t: record.n_t,
    };
    run(model, source, probes, &step_grid, decim, backend, None)
}

// ---------------------------------------------------------------------------
// Runner internals
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Vx,
    Vz,
    P,
}

#[derive(Debug, Clone)]
enum Stf {
    /// Running integral of a rectangular heating pulse.
    Ramp { tau: f64 },
    /// One-sample kick at the given solver step.
    Kick { step: usize },
}

impl Stf {
    fn eval(&self, n: usize, dt: f64) -> f64 {
        match self {
            Stf::Ramp { tau } => source::heating_ramp((n as f64 + 0.5) * dt, *tau),
            Stf::Kick { step } => {
                if n == *step {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

struct LoweredSource {
    injections: Vec<(Field, usize, f64)>,
    stf: Stf,
}

struct LoweredProbe {
    field: Field,
    stencil: Stencil4,
    integrate: bool,
}

fn lower_source(
    g: &SimGrid,
    spec: &SourceSpec,
    scale: f64,
    dt: f64,
    backend: Backend,
    out: &mut Vec<LoweredSource>,
    warnings: &mut Vec<String>,
) -> Result<(), SimError> {
    match spec {
        SourceSpec::Laser {
            center_x,
            fwhm,
            pulse_width,
            amplitude,
        } => {
            if *fwhm < g.h {
                warnings.push(format!(
                    "laser FWHM {fwhm} m is below the cell size {} m; source is under-resolved",
                    g.h
                ));
            }
            // Gaussian sampled on the surface columns within reach of the beam.
            let mut cols: Vec<(usize, f64)> = Vec::new();
            let reach = 4.0 * fwhm;
            for i in 0..g.nx {
                let x = g.node_x(i);
                if x.abs() <= g.half_width && (x - center_x).abs() <= reach {
                    cols.push((i, source::gaussian_fwhm(x - center_x, *fwhm)));
                }
            }
            let peak = cols.iter().map(|&(_, w)| w).fold(0.0_f64, f64::max);
            if peak <= 0.0 {
                return Err(SimError::Source(
                    "laser beam does not overlap the surface".into(),
                ));
            }
            let amp = scale * amplitude;
            let mut injections = Vec::with_capacity(cols.len() * 2);
            match backend {
                Backend::Elastic => {
                    // Surface (z = 0) on the vz lattice splits between the
                    // rows straddling the material boundary.
                    let (jm, jp) = (g.jz_phys0 - 1, g.jz_phys0);
                    for &(i, w) in &cols {
                        let w = w / peak * amp;
                        injections.push((Field::Vz, jm * g.nx + i, 0.5 * w));
                        injections.push((Field::Vz, jp * g.nx + i, 0.5 * w));
                    }
                }
                Backend::Scalar => {
                    let j = g.jz_phys0;
                    for &(i, w) in &cols {
                        injections.push((Field::P, j * g.nx + i, w / peak * amp));
                    }
                }
            }
            out.push(LoweredSource {
                injections,
                stf: Stf::Ramp { tau: *pulse_width },
            });
            Ok(())
        }
        SourceSpec::Impulse {
            x,
            z,
            amplitude,
            onset,
        } => {
            let amp = scale * amplitude;
            let step = (onset / dt).round() as usize;
            let mut injections = Vec::with_capacity(4);
            match backend {
                Backend::Elastic => {
                    for (idx, w) in g.bilinear(*x, *z, Lattice::HalfZ)? {
                        injections.push((Field::Vz, idx, w * amp));
                    }
                }
                Backend::Scalar => {
                    for (idx, w) in g.bilinear(*x, *z, Lattice::Node)? {
                        injections.push((Field::P, idx, w * amp));
                    }
                }
            }
            out.push(LoweredSource {
                injections,
                stf: Stf::Kick { step },
            });
            Ok(())
        }
        SourceSpec::Dipole {
            x,
            z,
            angle,
            amplitude,
            onset,
        } => {
            let amp = scale * amplitude;
            let step = (onset / dt).round() as usize;
            let (px, pz) = (angle.cos(), angle.sin());
            let mut injections = Vec::with_capacity(8);
            match backend {
                Backend::Elastic => {
                    // Oriented point force along p at z.
                    for (idx, w) in g.bilinear(*x, *z, Lattice::HalfX)? {
                        injections.push((Field::Vx, idx, w * amp * px));
                    }
                    for (idx, w) in g.bilinear(*x, *z, Lattice::HalfZ)? {
                        injections.push((Field::Vz, idx, w * amp * pz));
                    }
                }
                Backend::Scalar => {
                    // Directional derivative: opposite monopoles one cell
                    // apart along p, scaled by 1/cell.
                    let arm = 0.5 * g.h;
                    let s = amp / g.h;
                    for (idx, w) in g.bilinear(x + arm * px, z + arm * pz, Lattice::Node)? {
                        injections.push((Field::P, idx, w * s));
                    }
                    for (idx, w) in g.bilinear(x - arm * px, z - arm * pz, Lattice::Node)? {
                        injections.push((Field::P, idx, -w * s));
                    }
                }
            }
            out.push(LoweredSource {
                injections,
                stf: Stf::Kick { step },
            });
            Ok(())
        }
        SourceSpec::Superposition(parts) => {
            for (w, part) in parts {
                lower_source(g, part, scale * w, dt, backend, out, warnings)?;
            }
            Ok(())
        }
    }
}

fn lower_probe(g: &SimGrid, p: &Probe, backend: Backend) -> Result<LoweredProbe, SimError> {
    let (field, lattice, integrate) = match (backend, p.component) {
        (Backend::Elastic, Component::Horizontal) => (Field::Vx, Lattice::HalfX, true),
        (Backend::Elastic, Component::Vertical) => (Field::Vz, Lattice::HalfZ, true),
        (Backend::Scalar, Component::Field) => (Field::P, Lattice::Node, false),
        (b, c) => {
            return Err(SimError::Geometry(format!(
                "probe component {c:?} is not recorded by the {b:?} backend"
            )))
        }
    };
    Ok(LoweredProbe {
        field,
        stencil: g.bilinear(p.x, p.z, lattice)?,
        integrate,
    })
}

enum Sim<'g> {
    Elastic(ElasticSim<'g>),
    Scalar(ScalarSim<'g>),
}

impl<'g> Sim<'g> {
    fn add(&mut self, f: Field, idx: usize, amount: f64) {
        match self {
            Sim::Elastic(s) => match f {
                Field::Vx => s.vx[idx] += amount,
                Field::Vz => s.vz[idx] += amount,
                Field::P => unreachable!("scalar field on elastic backend"),
            },
            Sim::Scalar(s) => match f {
                Field::P => s.p[idx] += amount,
                _ => unreachable!("velocity source on scalar backend"),
            },
        }
    }

    fn get(&self, f: Field, idx: usize) -> f64 {
        match self {
            Sim::Elastic(s) => match f {
                Field::Vx => s.vx[idx],
                Field::Vz => s.vz[idx],
                Field::P => 0.0,
            },
            Sim::Scalar(s) => match f {
                Field::P => s.p[idx],
                Field::Vx => s.vx[idx],
                Field::Vz => s.vz[idx],
            },
        }
    }

    fn vel_pass(&mut self) {
        match self {
            Sim::Elastic(s) => s.vel_pass(),
            Sim::Scalar(s) => s.vel_pass(),
        }
    }

    fn stress_pass(&mut self) {
        match self {
            Sim::Elastic(s) => s.stress_pass(),
            Sim::Scalar(s) => s.stress_pass(),
        }
    }

    fn set_energy_tracking(&mut self, on: bool) {
        match self {
            Sim::Elastic(s) => s.set_energy_tracking(on),
            Sim::Scalar(s) => s.set_energy_tracking(on),
        }
    }

    fn energy(&self) -> f64 {
        match self {
            Sim::Elastic(s) => s.energy(),
            Sim::Scalar(s) => s.energy(),
        }
    }
}

/// Step `grid.n_t × decim` solver steps of size `grid.dt`, recording every
/// `decim`-th sample. When `energy_out` is given, the staggered-form field
/// energy is appended once per solver step.
fn run(
    model: &MaterialModel2D,
    source: &SourceSpec,
    probes: &[Probe],
    grid: &TimeGrid,
    decim: usize,
    backend: Backend,
    energy_out: Option<&mut Vec<f64>>,
) -> Result<SimResult, SimError> {
    let g = SimGrid::build(model, backend)?;
    source.validate(grid.dt * decim as f64)?;
    let mut warnings = Vec::new();
    let mut sources = Vec::new();
    lower_source(&g, source, 1.0, grid.dt, backend, &mut sources, &mut warnings)?;
    let lowered: Vec<LoweredProbe> = probes
        .iter()
        .map(|p| lower_probe(&g, p, backend))
        .collect::<Result<_, _>>()?;

    let mut sim = match backend {
        Backend::Elastic => Sim::Elastic(ElasticSim::new(&g, grid.dt)),
        Backend::Scalar => Sim::Scalar(ScalarSim::new(&g, grid.dt)),
    };
    let mut energy_out = energy_out;
    if energy_out.is_some() {
        sim.set_energy_tracking(true);
    }

    // Force injections are scaled by dt and, for velocity fields, by the
    // local buoyancy so the update matches v ← g·(v + dt·b·(divσ + f)).
    let force_factor = |f: Field, idx: usize| -> f64 {
        match f {
            Field::Vx => g.bx[idx],
            Field::Vz => g.bz[idx],
            Field::P => 1.0,
        }
    };

    let n_steps = grid.n_t * decim;
    let mut traces = vec![vec![0.0; grid.n_t]; probes.len()];
    let mut disp = vec![0.0; probes.len()];
    let mut prev = vec![0.0; probes.len()];
    SIM_COUNT.fetch_add(1, Ordering::Relaxed);

    for n in 0..n_steps {
        for src in &sources {
            let s = src.stf.eval(n, grid.dt);
            if s != 0.0 {
                for &(f, idx, w) in &src.injections {
                    if f != Field::P {
                        sim.add(f, idx, grid.dt * force_factor(f, idx) * w * s);
                    }
                }
            }
        }
        sim.vel_pass();
        if let Some(out) = energy_out.as_deref_mut() {
            out.push(sim.energy());
        }
        for src in &sources {
            let s = src.stf.eval(n, grid.dt);
            if s != 0.0 {
                for &(f, idx, w) in &src.injections {
                    if f == Field::P {
                        sim.add(f, idx, grid.dt * w * s);
                    }
                }
            }
        }
        sim.stress_pass();

        for (k, lp) in lowered.iter().enumerate() {
            let val: f64 = lp
                .stencil
                .iter()
                .map(|&(idx, w)| w * sim.get(lp.field, idx))
                .sum();
            if lp.integrate {
                disp[k] += 0.5 * grid.dt * (prev[k] + val);
                prev[k] = val;
            } else {
                disp[k] = val;
            }
        }
        if (n + 1) % decim == 0 {
            let slot = (n + 1) / decim - 1;
            for (k, d) in disp.iter().enumerate() {
                traces[k][slot] = *d;
            }
        }
    }

    Ok(SimResult { traces, warnings })
}

/// Diagnostic entry point used by tests: per-step energies alongside traces.
#[doc(hidden)]
pub fn simulate_with_energy(
    model: &MaterialModel2D,
    source: &SourceSpec,
    probes: &[Probe],
    grid: &TimeGrid,
    backend: Backend,
) -> Result<(SimResult, Vec<f64>), SimError> {
    let dt_max = stable_dt(model, backend)?;
    if grid.dt > dt_max * (1.0 + 1e-12) {
        return Err(SimError::Stability(format!(
            "dt = {:.4e} s exceeds the stable limit {:.4e} s",
            grid.dt, dt_max
        )));
    }
    let mut energies = Vec::with_capacity(grid.n_t);
    let res = run(model, source, probes, grid, 1, backend, Some(&mut energies))?;
    Ok((res, energies))
}
