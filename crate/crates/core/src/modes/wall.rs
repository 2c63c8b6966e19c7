use serde::{Deserialize, Serialize};

use super::CellGeometry;
use crate::error::{invalid, Result};

/// Wall quality, expressed through the mean number of wall collisions
/// survived by a polarized atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallQuality {
    /// Every collision depolarizes (`N -> 0`).
    Depolarizing,
    /// Finite survival number `N > 0`.
    Finite(f64),
    /// Collisions never depolarize (`N -> infinity`).
    Preserving,
}

impl WallQuality {
    pub fn from_collisions(n: f64) -> Result<Self> {
        if n.is_nan() || n <= 0.0 {
            return Err(invalid(format!("wall collision number must be > 0, got {n}")));
        }
        Ok(if n.is_infinite() { Self::Preserving } else { Self::Finite(n) })
    }

    /// Depolarization probability per collision, `1 - exp(-1/N)`.
    pub fn loss_probability(&self) -> f64 {
        match *self {
            Self::Depolarizing => 1.0,
            Self::Finite(n) => -(-1.0 / n).exp_m1(),
            Self::Preserving => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Depolarizing => "dirichlet".into(),
            Self::Finite(n) => format!("{n}"),
            Self::Preserving => "inf".into(),
        }
    }
}

/// Boundary condition coefficients in `a u + b dn u = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCoefficients {
    Dirichlet,
    Neumann,
    Robin { a: f64, b: f64 },
}

impl BoundaryCoefficients {
    /// `b / a`; zero for Dirichlet and infinite for Neumann.
    pub fn robin_length(&self) -> f64 {
        match *self {
            Self::Dirichlet => 0.0,
            Self::Neumann => f64::INFINITY,
            Self::Robin { a, b } => b / a,
        }
    }
}

/// Gas and wall parameters for one atomic species. Lengths in cm,
/// diffusion coefficient in cm^2/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallGasSpec {
    pub diffusion: f64,
    pub mean_free_path: f64,
    pub wall: WallQuality,
}

impl WallGasSpec {
    pub fn new(diffusion: f64, mean_free_path: f64, wall: WallQuality) -> Result<Self> {
        let spec = Self { diffusion, mean_free_path, wall };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diffusion.is_finite() && self.diffusion > 0.0) {
            return Err(invalid(format!("diffusion coefficient must be > 0, got {}", self.diffusion)));
        }
        if !(self.mean_free_path.is_finite() && self.mean_free_path > 0.0) {
            return Err(invalid(format!("mean free path must be > 0, got {}", self.mean_free_path)));
        }
        if let WallQuality::Finite(n) = self.wall {
            if !(n > 0.0 && n.is_finite()) {
                return Err(invalid(format!("wall collision number must be > 0, got {n}")));
            }
        }
        Ok(())
    }

    /// Mean thermal speed `3 D / lambda` in cm/s.
    pub fn mean_speed(&self) -> f64 {
        3.0 * self.diffusion / self.mean_free_path
    }

    /// Effective wall-rate length `(lambda/3) / (exp(1/N) - 1)`.
    pub fn varpi(&self) -> f64 {
        match self.wall {
            WallQuality::Depolarizing => 0.0,
            WallQuality::Finite(n) => self.mean_free_path / 3.0 / (1.0 / n).exp_m1(),
            WallQuality::Preserving => f64::INFINITY,
        }
    }

    /// Coefficients for a cell of the given dimensionality factor
    /// (see [`CellGeometry::robin_factor`]).
    pub fn boundary_coefficients(&self, robin_factor: f64) -> BoundaryCoefficients {
        match self.wall {
            WallQuality::Depolarizing => BoundaryCoefficients::Dirichlet,
            WallQuality::Preserving => BoundaryCoefficients::Neumann,
            WallQuality::Finite(n) => {
                let e = (-1.0 / n).exp();
                BoundaryCoefficients::Robin {
                    a: -(-1.0 / n).exp_m1(),
                    b: robin_factor * self.mean_free_path * (1.0 + e),
                }
            }
        }
    }

    /// Robin length `(2/3) lambda (1 + e^{-1/N}) / (1 - e^{-1/N})` for a
    /// three-dimensional cell.
    pub fn robin_length(&self) -> f64 {
        self.boundary_coefficients(2.0 / 3.0).robin_length()
    }

    pub fn robin_length_in(&self, geometry: &CellGeometry) -> f64 {
        self.boundary_coefficients(geometry.robin_factor()).robin_length()
    }

    /// Warnings for parameters outside the diffusive regime.
    pub fn validity_warnings(&self, geometry: &CellGeometry) -> Vec<String> {
        let mut out = Vec::new();
        let dim = geometry.min_dimension();
        if self.mean_free_path > dim / 10.0 {
            out.push(format!(
                "mean free path {} cm exceeds a tenth of the smallest cell dimension {} cm; the diffusion description is unreliable",
                self.mean_free_path, dim
            ));
        }
        out
    }
}
