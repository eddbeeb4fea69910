//! Staggered-grid layout, material coefficient fields, and sponge profiles.
//!
//! All fields share one `nx × nz` storage lattice (row-major, `j*nx + i`).
//! Normal stresses and the scalar field live on integer nodes, `vx` at
//! `(i+1/2, j)`, `vz` at `(i, j+1/2)`, and the shear stress at
//! `(i+1/2, j+1/2)`. Vacuum is encoded by zeroed Lamé parameters and zero
//! buoyancy; those nodes never move, which realizes traction-free
//! boundaries at material/vacuum interfaces.

use super::model::{EdgeCondition, MaterialModel2D};
use super::{Backend, SimError};

/// Frozen halo so 4th-order stencils never index out of bounds.
const HALO: usize = 2;
/// Updated vacuum pad beyond a traction-free edge (includes the halo).
const FREE_MARGIN: usize = 4;
/// Per-step damping exponent at the outer edge of a sponge layer.
const SPONGE_STRENGTH: f64 = 0.1;

/// Which storage lattice a position is mapped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Lattice {
    /// Integer nodes: σxx, σzz, scalar field, material samples.
    Node,
    /// (i+1/2, j): horizontal velocity.
    HalfX,
    /// (i, j+1/2): vertical velocity.
    HalfZ,
}

/// A position lowered onto one lattice: four nodes and bilinear weights.
pub(crate) type Stencil4 = [(usize, f64); 4];

pub(crate) struct SimGrid {
    pub nx: usize,
    pub nz: usize,
    pub h: f64,
    /// Integer-node storage column of physical x = -width/2.
    pub ix_phys0: usize,
    /// Integer-node storage row of physical z = 0.
    pub jz_phys0: usize,
    /// Half the physical width; physical x is centered on the array.
    pub half_width: f64,
    /// λ + 2μ at integer nodes (elastic).
    pub c11: Vec<f64>,
    /// λ at integer nodes (elastic).
    pub lam: Vec<f64>,
    /// Effective shear modulus at (i+1/2, j+1/2) (elastic).
    pub mue: Vec<f64>,
    /// ρc² at integer nodes (scalar).
    pub kap: Vec<f64>,
    /// Buoyancy 2/(ρᵢ+ρᵢ₊₁) at vx nodes; 0 marks vacuum.
    pub bx: Vec<f64>,
    /// Buoyancy 2/(ρⱼ+ρⱼ₊₁) at vz nodes; 0 marks vacuum.
    pub bz: Vec<f64>,
    /// Per-column and per-row sponge damping factors (1 outside sponges).
    pub gx: Vec<f64>,
    pub gz: Vec<f64>,
    /// True where the damping factors are not identically 1.
    pub damped: bool,
}

fn margin(edge: EdgeCondition) -> usize {
    match edge {
        EdgeCondition::TractionFree => FREE_MARGIN,
        EdgeCondition::Absorbing { cells } => HALO + cells,
    }
}

fn sponge_cells(edge: EdgeCondition) -> usize {
    match edge {
        EdgeCondition::TractionFree => 0,
        EdgeCondition::Absorbing { cells } => cells,
    }
}

impl SimGrid {
    pub fn build(model: &MaterialModel2D, backend: Backend) -> Result<SimGrid, SimError> {
        model.validate()?;
        let h = model.cell_size;
        let nx_phys = (model.width / h).round().max(1.0) as usize;
        let nz_phys = (model.depth / h).round().max(1.0) as usize;

        let b = &model.boundaries;
        let (ml, mr) = (margin(b.left), margin(b.right));
        let (mt, mb) = (margin(b.top), margin(b.bottom));
        let (sl, sr) = (sponge_cells(b.left), sponge_cells(b.right));
        let (st, sb) = (sponge_cells(b.top), sponge_cells(b.bottom));

        let nx = nx_phys + ml + mr;
        let nz = nz_phys + mt + mb;
        // Material region spans the sponges plus the physical cells.
        let ix_mat0 = ml - sl;
        let ix_mat1 = ml + nx_phys + sr;
        let jz_mat0 = mt - st;
        let jz_mat1 = mt + nz_phys + sb;
        let ix_phys0 = ml;
        let jz_phys0 = mt;

        let n = nx * nz;
        let (lam0, mu0, rho0) = (model.lambda(), model.mu(), model.density);
        let kap0 = model.density * model.c_l * model.c_l;

        // Cell-centered density/material masks; vacuum outside the material
        // region and inside voids.
        let mut rho = vec![0.0; n];
        let mut solid = vec![false; n];
        for j in jz_mat0..jz_mat1 {
            for i in ix_mat0..ix_mat1 {
                let x = (i as f64 - ix_phys0 as f64) * h - model.width / 2.0;
                let z = (j as f64 - jz_phys0 as f64) * h;
                let in_void = model
                    .voids
                    .iter()
                    .any(|v| (x - v.x).powi(2) + (z - v.z).powi(2) < v.radius * v.radius);
                if !in_void {
                    rho[j * nx + i] = rho0;
                    solid[j * nx + i] = true;
                }
            }
        }

        let mut g = SimGrid {
            nx,
            nz,
            h,
            ix_phys0,
            jz_phys0,
            half_width: model.width / 2.0,
            c11: Vec::new(),
            lam: Vec::new(),
            mue: Vec::new(),
            kap: Vec::new(),
            bx: vec![0.0; n],
            bz: vec![0.0; n],
            gx: vec![1.0; nx],
            gz: vec![1.0; nz],
            damped: false,
        };

        // Buoyancy at staggered velocity nodes: arithmetic density average,
        // zero (frozen node) when both neighbors are vacuum.
        for j in 0..nz {
            for i in 0..nx - 1 {
                let s = rho[j * nx + i] + rho[j * nx + i + 1];
                if s > 0.0 {
                    g.bx[j * nx + i] = 2.0 / s;
                }
            }
        }
        for j in 0..nz - 1 {
            for i in 0..nx {
                let s = rho[j * nx + i] + rho[(j + 1) * nx + i];
                if s > 0.0 {
                    g.bz[j * nx + i] = 2.0 / s;
                }
            }
        }

        match backend {
            Backend::Elastic => {
                g.c11 = vec![0.0; n];
                g.lam = vec![0.0; n];
                g.mue = vec![0.0; n];
                for k in 0..n {
                    if solid[k] {
                        g.c11[k] = lam0 + 2.0 * mu0;
                        g.lam[k] = lam0;
                    }
                }
                // Harmonic shear modulus at cell corners; any vacuum
                // neighbor zeroes the coupling (traction-free contact).
                for j in 0..nz - 1 {
                    for i in 0..nx - 1 {
                        let q = [
                            solid[j * nx + i],
                            solid[j * nx + i + 1],
                            solid[(j + 1) * nx + i],
                            solid[(j + 1) * nx + i + 1],
                        ];
                        if q.iter().all(|&s| s) {
                            g.mue[j * nx + i] = mu0;
                        }
                    }
                }
            }
            Backend::Scalar => {
                g.kap = vec![0.0; n];
                for k in 0..n {
                    if solid[k] {
                        g.kap[k] = kap0;
                    }
                }
            }
        }

        // Quadratic-exponent sponge taper, deepest at the outer edge.
        let taper = |depth: f64, width: usize| -> f64 {
            let xi = depth / width as f64;
            (-SPONGE_STRENGTH * xi * xi).exp()
        };
        if sl > 0 {
            for i in ix_mat0..ix_phys0 {
                g.gx[i] = taper((ix_phys0 - i) as f64, sl);
            }
        }
        if sr > 0 {
            let inner = ix_phys0 + nx_phys;
            for i in inner..ix_mat1 {
                g.gx[i] = taper((i - inner + 1) as f64, sr);
            }
        }
        if st > 0 {
            for j in jz_mat0..jz_phys0 {
                g.gz[j] = taper((jz_phys0 - j) as f64, st);
            }
        }
        if sb > 0 {
            let inner = jz_phys0 + nz_phys;
            for j in inner..jz_mat1 {
                g.gz[j] = taper((j - inner + 1) as f64, sb);
            }
        }
        g.damped = g.gx.iter().chain(g.gz.iter()).any(|&v| v != 1.0);
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    fn frac(&self, x: f64, z: f64, lat: Lattice) -> (f64, f64) {
        let half = match lat {
            Lattice::Node => (0.0, 0.0),
            Lattice::HalfX => (0.5, 0.0),
            Lattice::HalfZ => (0.0, 0.5),
        };
        // Physical x = -width/2 sits on integer column ix_phys0.
        let fx = (x + self.half_width) / self.h + self.ix_phys0 as f64 - half.0;
        let fz = z / self.h + self.jz_phys0 as f64 - half.1;
        (fx, fz)
    }

    /// Bilinear stencil for a physical position on the given lattice.
    ///
    /// `x` is measured from the left edge of the physical domain shifted so
    /// that callers pass centered coordinates; see `centered_x`.
    pub fn bilinear(&self, x: f64, z: f64, lat: Lattice) -> Result<Stencil4, SimError> {
        let (fx, fz) = self.frac(x, z, lat);
        let i0 = fx.floor();
        let j0 = fz.floor();
        let (wx, wz) = (fx - i0, fz - j0);
        let (i0, j0) = (i0 as isize, j0 as isize);
        let lo = HALO as isize;
        if i0 < lo || j0 < lo || i0 + 1 >= (self.nx - HALO) as isize || j0 + 1 >= (self.nz - HALO) as isize
        {
            return Err(SimError::Geometry(format!(
                "position (x={x}, z={z}) falls outside the simulated domain"
            )));
        }
        let (i0, j0) = (i0 as usize, j0 as usize);
        let idx = |i: usize, j: usize| j * self.nx + i;
        Ok([
            (idx(i0, j0), (1.0 - wx) * (1.0 - wz)),
            (idx(i0 + 1, j0), wx * (1.0 - wz)),
            (idx(i0, j0 + 1), (1.0 - wx) * wz),
            (idx(i0 + 1, j0 + 1), wx * wz),
        ])
    }

    /// x-coordinate (centered convention) of integer-node column `i`.
    pub fn node_x(&self, i: usize) -> f64 {
        (i as f64 - self.ix_phys0 as f64) * self.h - self.half_width
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavesim::model::BoundarySpec;

    fn model() -> MaterialModel2D {
        MaterialModel2D {
            width: 10e-3,
            depth: 5e-3,
            cell_size: 0.5e-3,
            density: 2730.0,
            c_l: 6580.0,
            c_s: 3211.0,
            voids: vec![],
            boundaries: BoundarySpec::plate(),
        }
    }

    #[test]
    fn dimensions_and_margins() {
        let g = SimGrid::build(&model(), Backend::Elastic).unwrap();
        // 20 physical + 2×(2 halo + 30 sponge) columns; 10 physical + 2×4 vacuum rows.
        assert_eq!(g.nx, 20 + 64);
        assert_eq!(g.nz, 10 + 8);
        assert_eq!(g.jz_phys0, 4);
        assert_eq!(g.ix_phys0, 32);
    }

    #[test]
    fn vacuum_above_surface_and_in_voids() {
        let mut m = model();
        m.voids.push(crate::wavesim::model::CircularVoid {
            x: 0.0,
            z: 2.5e-3,
            radius: 1e-3,
        });
        let g = SimGrid::build(&m, Backend::Elastic).unwrap();
        let center = (g.jz_phys0 + 5) * g.nx + g.ix_phys0 + 10;
        assert_eq!(g.c11[center], 0.0, "void cell must be vacuum");
        let above = (g.jz_phys0 - 1) * g.nx + g.ix_phys0 + 10;
        assert_eq!(g.c11[above], 0.0, "row above the surface must be vacuum");
        let surface = g.jz_phys0 * g.nx + g.ix_phys0 + 10;
        assert!(g.c11[surface] > 0.0);
        // Surface vz node (half cell above z=0) must be mobile: ρ average is ρ/2.
        let b_surf = g.bz[(g.jz_phys0 - 1) * g.nx + g.ix_phys0 + 10];
        assert!((b_surf - 2.0 / 2730.0).abs() < 1e-15);
    }

    #[test]
    fn sponge_profile_monotone() {
        let g = SimGrid::build(&model(), Backend::Elastic).unwrap();
        // Left sponge occupies columns [2, 32); damping deepens outward.
        for i in 3..32 {
            assert!(g.gx[i] >= g.gx[i - 1], "taper must decay outward");
        }
        assert!(g.gx[2] < 1.0 && g.gx[31] < 1.0 && g.gx[32] == 1.0);
        assert!(g.damped);
    }

    #[test]
    fn bilinear_recovers_node_positions() {
        let g = SimGrid::build(&model(), Backend::Elastic).unwrap();
        // Position exactly on an integer node: all weight on that node.
        let st = g.bilinear(0.0, 1e-3, Lattice::Node).unwrap();
        let total: f64 = st.iter().map(|&(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let peak = st.iter().cloned().fold((0usize, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert!((peak.1 - 1.0).abs() < 1e-12);
        assert_eq!(peak.0, (g.jz_phys0 + 2) * g.nx + g.ix_phys0 + 10);
        // Surface position on the vz lattice splits between the two rows
        // straddling z = 0.
        let st = g.bilinear(0.0, 0.0, Lattice::HalfZ).unwrap();
        let ws: Vec<f64> = st.iter().map(|&(_, w)| w).collect();
        assert!((ws[0] - 0.5).abs() < 1e-12 && (ws[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_domain_position_rejected() {
        let g = SimGrid::build(&model(), Backend::Elastic).unwrap();
        assert!(g.bilinear(0.0, 20e-3, Lattice::Node).is_err());
    }
}
