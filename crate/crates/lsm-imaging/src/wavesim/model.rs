//! Plate model description: geometry, material, defects, and edge conditions.
//!
//! The model lives in a 2D plane-strain section of the specimen. Coordinates
//! are `x` along the surface, centered on the array (`x ∈ [-width/2, width/2]`),
//! and `z` downward from the top surface (`z ∈ [0, depth]`). All quantities
//! are SI (meters, seconds, kg/m³, m/s).

use serde::{Deserialize, Serialize};

use super::SimError;

/// A circular through-thickness void, realized as vacuum cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularVoid {
    /// Center, m.
    pub x: f64,
    /// Center depth below the surface, m.
    pub z: f64,
    /// Radius, m.
    pub radius: f64,
}

/// Condition applied at one edge of the rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCondition {
    /// Stress-free surface (vacuum beyond the edge).
    TractionFree,
    /// Exponential-taper sponge of the given width in cells.
    Absorbing { cells: usize },
}

impl EdgeCondition {
    /// Default sponge used when the config just says "absorbing".
    pub fn absorbing_default() -> Self {
        EdgeCondition::Absorbing { cells: 30 }
    }
}

/// Edge conditions for the four sides of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub top: EdgeCondition,
    pub bottom: EdgeCondition,
    pub left: EdgeCondition,
    pub right: EdgeCondition,
}

impl BoundarySpec {
    /// Plate in air: free top and bottom, absorbing sides.
    pub fn plate() -> Self {
        BoundarySpec {
            top: EdgeCondition::TractionFree,
            bottom: EdgeCondition::TractionFree,
            left: EdgeCondition::absorbing_default(),
            right: EdgeCondition::absorbing_default(),
        }
    }
}

/// 2D plate model: geometry, homogeneous background material, and voids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel2D {
    /// Domain width along the surface, m.
    pub width: f64,
    /// Domain depth (plate thickness in the section plane), m.
    pub depth: f64,
    /// Grid cell size, m.
    pub cell_size: f64,
    /// Mass density, kg/m³.
    pub density: f64,
    /// Longitudinal wave speed, m/s.
    pub c_l: f64,
    /// Shear wave speed, m/s.
    pub c_s: f64,
    /// Circular voids, strictly inside the domain.
    pub voids: Vec<CircularVoid>,
    /// Per-edge boundary conditions.
    pub boundaries: BoundarySpec,
}

impl MaterialModel2D {
    /// First Lamé parameter λ = ρ(c_L² − 2c_S²), Pa.
    pub fn lambda(&self) -> f64 {
        self.density * (self.c_l * self.c_l - 2.0 * self.c_s * self.c_s)
    }

    /// Shear modulus μ = ρc_S², Pa.
    pub fn mu(&self) -> f64 {
        self.density * self.c_s * self.c_s
    }

    /// The model without its voids.
    pub fn background(&self) -> MaterialModel2D {
        MaterialModel2D {
            voids: Vec::new(),
            ..self.clone()
        }
    }

    /// True if `(x, z)` lies in the plate interior or on its surface.
    pub fn contains(&self, x: f64, z: f64) -> bool {
        let half = self.width / 2.0;
        x >= -half && x <= half && z >= 0.0 && z <= self.depth
    }

    /// Validate all structural invariants.
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.width > 0.0 && self.depth > 0.0 && self.cell_size > 0.0) {
            return Err(SimError::Geometry(format!(
                "domain dimensions and cell size must be positive (width={}, depth={}, h={})",
                self.width, self.depth, self.cell_size
            )));
        }
        if !(self.density > 0.0) {
            return Err(SimError::Material(format!(
                "density must be positive, got {}",
                self.density
            )));
        }
        if !(self.c_l > self.c_s && self.c_s > 0.0) {
            return Err(SimError::Material(format!(
                "wave speeds must satisfy c_L > c_S > 0, got c_L={}, c_S={}",
                self.c_l, self.c_s
            )));
        }
        let half = self.width / 2.0;
        for (k, v) in self.voids.iter().enumerate() {
            if !(v.radius > 0.0) {
                return Err(SimError::Geometry(format!(
                    "void {k} has non-positive radius {}",
                    v.radius
                )));
            }
            let inside = v.x - v.radius > -half
                && v.x + v.radius < half
                && v.z - v.radius > 0.0
                && v.z + v.radius < self.depth;
            if !inside {
                return Err(SimError::Geometry(format!(
                    "void {k} at ({}, {}) r={} is not strictly inside the domain",
                    v.x, v.z, v.radius
                )));
            }
        }
        for (name, edge) in [
            ("top", self.boundaries.top),
            ("bottom", self.boundaries.bottom),
            ("left", self.boundaries.left),
            ("right", self.boundaries.right),
        ] {
            if let EdgeCondition::Absorbing { cells } = edge {
                if cells < 10 {
                    return Err(SimError::Geometry(format!(
                        "{name} sponge width {cells} cells is below the 10-cell minimum"
                    )));
                }
            }
        }
        Ok(())
    }
}
