//! Velocity-stress P-SV stepper: 2nd order in time, 4th order in space.

use super::grid::SimGrid;

/// 4th-order staggered-grid difference coefficients.
pub(crate) const C1: f64 = 9.0 / 8.0;
pub(crate) const C2: f64 = -1.0 / 24.0;

pub(crate) struct ElasticSim<'g> {
    g: &'g SimGrid,
    dt: f64,
    pub vx: Vec<f64>,
    pub vz: Vec<f64>,
    pub sxx: Vec<f64>,
    pub szz: Vec<f64>,
    pub sxz: Vec<f64>,
    // Previous-half-step velocities, kept only while energy tracking is on.
    track_energy: bool,
    vx_prev: Vec<f64>,
    vz_prev: Vec<f64>,
}

impl<'g> ElasticSim<'g> {
    pub fn new(g: &'g SimGrid, dt: f64) -> Self {
        let n = g.len();
        ElasticSim {
            g,
            dt,
            vx: vec![0.0; n],
            vz: vec![0.0; n],
            sxx: vec![0.0; n],
            szz: vec![0.0; n],
            sxz: vec![0.0; n],
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

    /// Velocity half of the leapfrog step. Forces for this step must already
    /// be added to `vx`/`vz` so the sponge damps them consistently.
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
            let sxx_j = &self.sxx[o..o + nx];
            let szz_jm1 = &self.szz[o - nx..o];
            let szz_j = &self.szz[o..o + nx];
            let szz_jp1 = &self.szz[o + nx..o + 2 * nx];
            let szz_jp2 = &self.szz[o + 2 * nx..o + 3 * nx];
            let sxz_jm2 = &self.sxz[o - 2 * nx..o - nx];
            let sxz_jm1 = &self.sxz[o - nx..o];
            let sxz_j = &self.sxz[o..o + nx];
            let sxz_jp1 = &self.sxz[o + nx..o + 2 * nx];
            let bx_j = &self.g.bx[o..o + nx];
            let bz_j = &self.g.bz[o..o + nx];
            let vx_j = &mut self.vx[o..o + nx];
            for i in 2..nx - 2 {
                let dsxx = C1 * (sxx_j[i + 1] - sxx_j[i]) + C2 * (sxx_j[i + 2] - sxx_j[i - 1]);
                let dsxz = C1 * (sxz_j[i] - sxz_jm1[i]) + C2 * (sxz_jp1[i] - sxz_jm2[i]);
                vx_j[i] = (vx_j[i] + r * bx_j[i] * (dsxx + dsxz)) * (gx[i] * gzj);
            }
            let vz_j = &mut self.vz[o..o + nx];
            for i in 2..nx - 2 {
                let dsxz = C1 * (sxz_j[i] - sxz_j[i - 1]) + C2 * (sxz_j[i + 1] - sxz_j[i - 2]);
                let dszz = C1 * (szz_jp1[i] - szz_j[i]) + C2 * (szz_jp2[i] - szz_jm1[i]);
                vz_j[i] = (vz_j[i] + r * bz_j[i] * (dsxz + dszz)) * (gx[i] * gzj);
            }
        }
    }

    /// Stress half of the leapfrog step.
    pub fn stress_pass(&mut self) {
        let (nx, nz) = (self.g.nx, self.g.nz);
        let r = self.dt / self.g.h;
        let (gx, gz) = (&self.g.gx, &self.g.gz);
        for j in 2..nz - 2 {
            let o = j * nx;
            let gzj = gz[j];
            let vx_jm1 = &self.vx[o - nx..o];
            let vx_j = &self.vx[o..o + nx];
            let vx_jp1 = &self.vx[o + nx..o + 2 * nx];
            let vx_jp2 = &self.vx[o + 2 * nx..o + 3 * nx];
            let vz_jm2 = &self.vz[o - 2 * nx..o - nx];
            let vz_jm1 = &self.vz[o - nx..o];
            let vz_j = &self.vz[o..o + nx];
            let vz_jp1 = &self.vz[o + nx..o + 2 * nx];
            let c11_j = &self.g.c11[o..o + nx];
            let lam_j = &self.g.lam[o..o + nx];
            let mue_j = &self.g.mue[o..o + nx];
            let sxx_j = &mut self.sxx[o..o + nx];
            let szz_j = &mut self.szz[o..o + nx];
            for i in 2..nx - 2 {
                let exx = C1 * (vx_j[i] - vx_j[i - 1]) + C2 * (vx_j[i + 1] - vx_j[i - 2]);
                let ezz = C1 * (vz_j[i] - vz_jm1[i]) + C2 * (vz_jp1[i] - vz_jm2[i]);
                let g = gx[i] * gzj;
                sxx_j[i] = (sxx_j[i] + r * (c11_j[i] * exx + lam_j[i] * ezz)) * g;
                szz_j[i] = (szz_j[i] + r * (lam_j[i] * exx + c11_j[i] * ezz)) * g;
            }
            let sxz_j = &mut self.sxz[o..o + nx];
            for i in 2..nx - 2 {
                let dvxz = C1 * (vx_jp1[i] - vx_j[i]) + C2 * (vx_jp2[i] - vx_jm1[i]);
                let dvzx = C1 * (vz_j[i + 1] - vz_j[i]) + C2 * (vz_j[i + 2] - vz_j[i - 1]);
                sxz_j[i] = (sxz_j[i] + r * mue_j[i] * (dvxz + dvzx)) * (gx[i] * gzj);
            }
        }
    }

    /// Staggered-product energy ½⟨v⁻, B⁻¹v⁺⟩ + ½σᵀC⁻¹σ, exactly conserved
    /// by the undamped scheme. Valid only with energy tracking on, after a
    /// step.
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
            let (c11, lam) = (g.c11[k], g.lam[k]);
            if c11 > 0.0 {
                // Inverse of [[c11, λ], [λ, c11]].
                let det = c11 * c11 - lam * lam;
                let (a, b) = (self.sxx[k], self.szz[k]);
                e += 0.5 * (c11 * (a * a + b * b) - 2.0 * lam * a * b) / det;
            }
            if g.mue[k] > 0.0 {
                e += 0.5 * self.sxz[k] * self.sxz[k] / g.mue[k];
            }
        }
        e
    }
}
