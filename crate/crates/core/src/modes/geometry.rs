use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Cell shape. Every cell is centered on the origin; the cylinder axis is `z`.
/// Lengths are in cm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum CellGeometry {
    /// Infinite slab between `x = -length/2` and `x = +length/2`, treated in one dimension.
    Slab1d { length: f64 },
    Rectangular { lx: f64, ly: f64, lz: f64 },
    Cylindrical { radius: f64, length: f64 },
    Spherical { radius: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be a positive finite length, got {v}")))
    }
}

impl CellGeometry {
    pub fn slab(length: f64) -> Result<Self> {
        positive("length", length)?;
        Ok(Self::Slab1d { length })
    }

    pub fn rectangular(lx: f64, ly: f64, lz: f64) -> Result<Self> {
        positive("lx", lx)?;
        positive("ly", ly)?;
        positive("lz", lz)?;
        Ok(Self::Rectangular { lx, ly, lz })
    }

    pub fn cylinder(radius: f64, length: f64) -> Result<Self> {
        positive("radius", radius)?;
        positive("length", length)?;
        Ok(Self::Cylindrical { radius, length })
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        Ok(Self::Spherical { radius })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Slab1d { length } => positive("length", length),
            Self::Rectangular { lx, ly, lz } => {
                positive("lx", lx)?;
                positive("ly", ly)?;
                positive("lz", lz)
            }
            Self::Cylindrical { radius, length } => {
                positive("radius", radius)?;
                positive("length", length)
            }
            Self::Spherical { radius } => positive("radius", radius),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Slab1d { .. } => "slab1d",
            Self::Rectangular { .. } => "rectangular",
            Self::Cylindrical { .. } => "cylindrical",
            Self::Spherical { .. } => "spherical",
        }
    }

    /// Volume in cm^3, or length in cm for the one-dimensional slab.
    pub fn volume(&self) -> f64 {
        match *self {
            Self::Slab1d { length } => length,
            Self::Rectangular { lx, ly, lz } => lx * ly * lz,
            Self::Cylindrical { radius, length } => PI * radius * radius * length,
            Self::Spherical { radius } => 4.0 / 3.0 * PI * radius.powi(3),
        }
    }

    pub fn min_dimension(&self) -> f64 {
        match *self {
            Self::Slab1d { length } => length,
            Self::Rectangular { lx, ly, lz } => lx.min(ly).min(lz),
            Self::Cylindrical { radius, length } => (2.0 * radius).min(length),
            Self::Spherical { radius } => 2.0 * radius,
        }
    }

    pub fn is_one_dimensional(&self) -> bool {
        matches!(self, Self::Slab1d { .. })
    }

    /// Coefficient of the mean free path in the Robin length: 2 for the
    /// one-dimensional slab, 2/3 otherwise.
    pub fn robin_factor(&self) -> f64 {
        if self.is_one_dimensional() {
            2.0
        } else {
            2.0 / 3.0
        }
    }

    pub fn spatial_dims(&self) -> usize {
        if self.is_one_dimensional() {
            1
        } else {
            3
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let slack = 1e-12 * self.min_dimension();
        let within = |x: f64, half: f64| x.abs() <= half + slack;
        match *self {
            Self::Slab1d { length } => within(p[0], 0.5 * length),
            Self::Rectangular { lx, ly, lz } => within(p[0], 0.5 * lx) && within(p[1], 0.5 * ly) && within(p[2], 0.5 * lz),
            Self::Cylindrical { radius, length } => p[0].hypot(p[1]) <= radius + slack && within(p[2], 0.5 * length),
            Self::Spherical { radius } => (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() <= radius + slack,
        }
    }
}
