//! Scalar (acoustic) stepper sharing the staggered layout of the elastic
//! backend, propagating a single wave speed. Used for kinematic cross-checks
//! and cheap tests.

use super::elastic::{C1, C2};
use super::grid::SimGrid;

pub(crate) struct ScalarSim<'g> {
    g: &'g SimGrid,
    dt: f64,
    pub p: Vec<f64>,
    pub vx: Vec<f64>,
    pub vz: Vec<f64>,
    track_energy: bool,
    vx_prev: Vec<f64>,
    vz_prev: Vec<f64>,
}

impl<'g> ScalarSim<'g> {
    pub fn new(g: &'g SimGrid, dt: f64) -> Self {
        let n = g.len();
        ScalarSim {
            g,
            dt,
            p: vec![0.0; n],
            vx: vec![0.0; n],
            vz: vec![0.0; n],
            track_energy: false,
            vx_prev: Vec::new(),
            vz_prev: Vec::new(),
        }
    }

    pub fn set_energy_tracking(&mut self, on: bool) {
        self.track_energy = on;
        if on {
            self.vx_prev = vec![0.0; self.g.len()];
            self.vz_prev = vec![0.0; self.g.len()];
        }
    }

    /// Velocity half of the leapfrog step; see the elastic counterpart.
    pub fn vel_pass(&mut self) {
        if self.track_energy {
            self.vx_prev.copy_from_slice(&self.vx);
            self.vz_prev.copy_from_slice(&self.vz);
        }
        let (nx, nz) = (self.g.nx, self.g.nz);
        let r = self.dt / self.g.h;
        let (gx, gz) = (&self.g.gx, &self.g.gz);

        for j in 2..nz - 2 {
            let o = j * nx;
            let gzj = gz[j];
            let p_jm1 = &self.p[o - nx..o];
            let p_j = &self.p[o..o + nx];
            let p_jp1 = &self.p[o + nx..o + 2 * nx];
            let p_jp2 = &self.p[o + 2 * nx..o + 3 * nx];
            let bx_j = &self.g.bx[o..o + nx];
            let bz_j = &self.g.bz[o..o + nx];
            let vx_j = &mut self.vx[o..o + nx];
            for i in 2..nx - 2 {
                let dpx = C1 * (p_j[i + 1] - p_j[i]) + C2 * (p_j[i + 2] - p_j[i - 1]);
                vx_j[i] = (vx_j[i] - r * bx_j[i] * dpx) * (gx[i] * gzj);
            }
            let vz_j = &mut self.vz[o..o + nx];
            for i in 2..nx - 2 {
                let dpz = C1 * (p_jp1[i] - p_j[i]) + C2 * (p_jp2[i] - p_jm1[i]);
                vz_j[i] = (vz_j[i] - r * bz_j[i] * dpz) * (gx[i] * gzj);
            }
        }
    }

    /// Field half of the leapfrog step. Sources for this step must already
    /// be added to `p`.
    pub fn stress_pass(&mut self) {
        let (nx, nz) = (self.g.nx, self.g.nz);
        let r = self.dt / self.g.h;
        let (gx, gz) = (&self.g.gx, &self.g.gz);
        for j in 2..nz - 2 {
            let o = j * nx;
            let gzj = gz[j];
            let vx_j = &self.vx[o..o + nx];
            let vz_jm2 = &self.vz[o - 2 * nx..o - nx];
            let vz_jm1 = &self.vz[o - nx..o];
            let vz_j = &self.vz[o..o + nx];
            let vz_jp1 = &self.vz[o + nx..o + 2 * nx];
            let kap_j = &self.g.kap[o..o + nx];
            let p_j = &mut self.p[o..o + nx];
            for i in 2..nx - 2 {
                let div = C1 * (vx_j[i] - vx_j[i - 1]) + C2 * (vx_j[i + 1] - vx_j[i - 2])
                    + C1 * (vz_j[i] - vz_jm1[i])
                    + C2 * (vz_jp1[i] - vz_jm2[i]);
                p_j[i] = (p_j[i] - r * kap_j[i] * div) * (gx[i] * gzj);
            }
        }
    }

    /// Staggered-product energy; see the elastic counterpart.
    pub fn energy(&self) -> f64 {
        let g = self.g;
        let mut e = 0.0;
        for k in 0..g.len() {
            if g.bx[k] > 0.0 {
                e += 0.5 * self.vx_prev[k] * self.vx[k] / g.bx[k];
            }
            if g.bz[k] > 0.0 {
                e += 0.5 * self.vz_prev[k] * self.vz[k] / g.bz[k];
            }
            if g.kap[k] > 0.0 {
                e += 0.5 * self.p[k] * self.p[k] / g.kap[k];
            }
        }
        e
    }
}
