//! Diffusion eigenmodes of a vapor cell under wall-collision boundary
//! conditions.
//!
//! Each mode is a product of one-dimensional factors (slab and rectangular
//! cells), a radial Bessel factor times an axial factor (cylinder), or a
//! radial spherical Bessel factor times a spherical harmonic (sphere).

mod geometry;
mod wall;

pub use geometry::{Axis, CellGeometry};
pub use wall::{BoundaryCoefficients, WallGasSpec, WallQuality};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{invalid, Error, Result};
use crate::roots::scan_roots;
use crate::special::{bessel_j, bessel_j_prime, spherical_harmonic, spherical_j, spherical_j_prime};

pub const BASIS_FORMAT_VERSION: u32 = 1;

/// Largest accepted boundary-equation residual for a refined root.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> char {
        match self {
            Parity::Even => '+',
            Parity::Odd => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymmetryClass {
    /// Cosine (`Even`) or sine (`Odd`) profile along a cell axis.
    Axial { axis: Axis, parity: Parity },
    /// Bessel profile of the given angular order (cylinder) or degree (sphere).
    Radial { order: u32 },
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Axial { axis, parity } => write!(f, "axial({axis:?},{parity:?})"),
            Self::Radial { order } => write!(f, "radial(order {order})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Profile {
    Cos,
    Sin,
    Bessel(u32),
    SphBessel(u32),
}

impl Profile {
    fn value(self, x: f64) -> f64 {
        match self {
            Profile::Cos => x.cos(),
            Profile::Sin => x.sin(),
            Profile::Bessel(n) => bessel_j(n, x),
            Profile::SphBessel(l) => spherical_j(l, x),
        }
    }

    fn deriv(self, x: f64) -> f64 {
        match self {
            Profile::Cos => -x.sin(),
            Profile::Sin => x.cos(),
            Profile::Bessel(n) => bessel_j_prime(n, x),
            Profile::SphBessel(l) => spherical_j_prime(l, x),
        }
    }

    fn admits_uniform(self) -> bool {
        matches!(self, Profile::Cos | Profile::Bessel(0) | Profile::SphBessel(0))
    }
}

/// One-dimensional boundary problem `a f(k e) + b k f'(k e) = 0` at the
/// wall coordinate `e` (half-length or radius).
#[derive(Debug, Clone, Copy)]
struct ClassProblem {
    profile: Profile,
    extent: f64,
    char_len: f64,
    coeffs: BoundaryCoefficients,
}

impl ClassProblem {
    fn new(geometry: &CellGeometry, wall: &WallGasSpec, class: SymmetryClass) -> Result<Self> {
        geometry.validate()?;
        wall.validate()?;
        let coeffs = wall.boundary_coefficients(geometry.robin_factor());
        let bad = || Error::InvalidSymmetry(format!("{class} for {} cell", geometry.name()));
        let axial = |len: f64, parity: Parity| ClassProblem {
            profile: if parity == Parity::Even { Profile::Cos } else { Profile::Sin },
            extent: 0.5 * len,
            char_len: len,
            coeffs,
        };
        match (*geometry, class) {
            (CellGeometry::Slab1d { length }, SymmetryClass::Axial { axis: Axis::X, parity }) => Ok(axial(length, parity)),
            (CellGeometry::Rectangular { lx, ly, lz }, SymmetryClass::Axial { axis, parity }) => {
                let len = [lx, ly, lz][axis.index()];
                Ok(axial(len, parity))
            }
            (CellGeometry::Cylindrical { length, .. }, SymmetryClass::Axial { axis: Axis::Z, parity }) => Ok(axial(length, parity)),
            (CellGeometry::Cylindrical { radius, .. }, SymmetryClass::Radial { order }) => {
                Ok(ClassProblem { profile: Profile::Bessel(order), extent: radius, char_len: radius, coeffs })
            }
            (CellGeometry::Spherical { radius }, SymmetryClass::Radial { order }) => {
                Ok(ClassProblem { profile: Profile::SphBessel(order), extent: radius, char_len: radius, coeffs })
            }
            _ => Err(bad()),
        }
    }

    fn boundary(&self, k: f64) -> f64 {
        let x = k * self.extent;
        match self.coeffs {
            BoundaryCoefficients::Dirichlet => self.profile.value(x),
            BoundaryCoefficients::Neumann => self.profile.deriv(x),
            BoundaryCoefficients::Robin { a, b } => a * self.profile.value(x) + b * k * self.profile.deriv(x),
        }
    }

    fn has_uniform_mode(&self) -> bool {
        matches!(self.coeffs, BoundaryCoefficients::Neumann) && self.profile.admits_uniform()
    }

    /// Residual of the boundary equation written as `-f/f' = h k`
    /// (or `f = 0`, `f' = 0` in the two limits), scaled by `1 + |h k|`.
    fn residual(&self, k: f64) -> f64 {
        let x = k * self.extent;
        match self.coeffs {
            BoundaryCoefficients::Dirichlet => self.profile.value(x).abs(),
            BoundaryCoefficients::Neumann => {
                if k == 0.0 {
                    0.0
                } else {
                    self.profile.deriv(x).abs()
                }
            }
            BoundaryCoefficients::Robin { a, b } => {
                let rhs = b / a * k;
                let fp = self.profile.deriv(x);
                if fp == 0.0 {
                    return f64::INFINITY;
                }
                let lhs = -self.profile.value(x) / fp;
                (lhs - rhs).abs() / (1.0 + rhs.abs())
            }
        }
    }

    fn roots(&self, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let mut out = Vec::with_capacity(count);
        if self.has_uniform_mode() {
            out.push(0.0);
        }
        let needed = count - out.len();
        let sign0 = if self.has_uniform_mode() { -1.0 } else { 1.0 };
        let step = PI / (100.0 * self.char_len);
        let order = match self.profile {
            Profile::Bessel(n) | Profile::SphBessel(n) => n as f64,
            _ => 0.0,
        };
        let k_max = (1.5 * (needed as f64 + order + 2.0) + 10.0) * PI / self.extent;
        let found = scan_roots(|k| self.boundary(k), sign0, step, needed, k_max)?;
        for k in found {
            let k = self.polish(k);
            let r = self.residual(k);
            if r >= ROOT_RESIDUAL_TOL {
                if !self.brackets_within_ulp(k) {
                return Err(Error::NonConvergence {
                    lo: k,
                    hi: k,
                        reason: format!("boundary residual {r:e} exceeds {ROOT_RESIDUAL_TOL:e}"),
                    });
                }
                log::debug!("root k = {k:e} accepted at ulp resolution (residual {r:e})");
            }
            out.push(k);
        }
        Ok(out)
    }

    /// Bisects the boundary function down to two adjacent doubles and
    /// returns the one with the smaller residual.
    fn polish(&self, k: f64) -> f64 {
        if k == 0.0 {
            return k;
        }
        let g = |x: f64| self.boundary(x);
        let mut width = 8.0 * (k.next_up() - k);
        let (mut lo, mut hi) = (k - width, k + width);
        let mut found = false;
        for _ in 0..20 {
            if g(lo).signum() != g(hi).signum() {
                found = true;
                break;
            }
            width *= 4.0;
            lo = k - width;
            hi = k + width;
        }
        if !found {
            return k;
        }
        let s_lo = g(lo).signum();
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = g(mid);
            if v == 0.0 {
                return mid;
            }
            if v.signum() == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if self.residual(lo) <= self.residual(hi) {
            lo
        } else {
            hi
        }
    }

    /// True when the boundary function changes sign between the neighbours
    /// of `k`, so no double lies closer to the exact root. Near the Neumann
    /// limit `-f/f'` is steep enough that the residual at the best double
    /// still exceeds the nominal tolerance.
    fn brackets_within_ulp(&self, k: f64) -> bool {
        let a = self.boundary(k.next_down());
        let b = self.boundary(k.next_up());
        a == 0.0 || b == 0.0 || a.signum() != b.signum()
    }
}

/// First `count` non-negative roots `k` (1/cm) of the boundary equation for
/// one symmetry class, ascending. Classes that admit a uniform mode under
/// `N = inf` include `k = 0` as the first root.
pub fn robin_roots(geometry: &CellGeometry, wall: &WallGasSpec, class: SymmetryClass, count: usize) -> Result<Vec<f64>> {
    ClassProblem::new(geometry, wall, class)?.roots(count)
}

/// True when the boundary function changes sign across the doubles
/// adjacent to `k`.
pub fn root_within_ulp(geometry: &CellGeometry, wall: &WallGasSpec, class: SymmetryClass, k: f64) -> Result<bool> {
    Ok(ClassProblem::new(geometry, wall, class)?.brackets_within_ulp(k))
}

/// Scaled boundary-equation residual at `k` for a symmetry class.
pub fn boundary_residual(geometry: &CellGeometry, wall: &WallGasSpec, class: SymmetryClass, k: f64) -> Result<f64> {
    Ok(ClassProblem::new(geometry, wall, class)?.residual(k))
}

/// Cosine or sine factor along one axis, normalized on `[-L/2, L/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialFactor {
    pub axis: Axis,
    pub parity: Parity,
    pub index: usize,
    pub k: f64,
    pub amplitude: f64,
    pub half_length: f64,
}

impl AxialFactor {
    fn new(axis: Axis, parity: Parity, index: usize, k: f64, half_length: f64) -> Self {
        let l = half_length;
        let s = if k == 0.0 { l } else { (2.0 * k * l).sin() / (2.0 * k) };
        let norm2 = match parity {
            Parity::Even => l + s,
            Parity::Odd => l - s,
        };
        Self { axis, parity, index, k, amplitude: 1.0 / norm2.sqrt(), half_length }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude
            * match self.parity {
                Parity::Even => (self.k * x).cos(),
                Parity::Odd => (self.k * x).sin(),
            }
    }

    fn label(&self) -> String {
        format!("{}{}", self.parity.sign(), self.index)
    }
}

/// Radial Bessel factor. For a cylinder the amplitude also absorbs the
/// `1/sqrt(2 pi)` of the azimuthal phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialFactor {
    pub order: u32,
    pub index: usize,
    pub k: f64,
    pub amplitude: f64,
    pub radius: f64,
    pub spherical: bool,
}

impl RadialFactor {
    fn cylindrical(order: u32, index: usize, k: f64, radius: f64) -> Self {
        let r = radius;
        let x = k * r;
        let integral = if k == 0.0 {
            0.5 * r * r
        } else {
            let j = bessel_j(order, x);
            let jp = bessel_j_prime(order, x);
            let n2 = (order * order) as f64;
            0.5 * r * r * (jp * jp + (1.0 - n2 / (x * x)) * j * j)
        };
        Self { order, index, k, amplitude: 1.0 / (2.0 * PI * integral).sqrt(), radius, spherical: false }
    }

    fn spherical(order: u32, index: usize, k: f64, radius: f64) -> Self {
        let r = radius;
        let x = k * r;
        let integral = if k == 0.0 {
            r.powi(3) / 3.0
        } else {
            let j = spherical_j(order, x);
            let jp = spherical_j_prime(order, x);
            let l = order as f64;
            0.5 * r.powi(3) * (j * j + jp * jp + j * jp / x - l * (l + 1.0) * j * j / (x * x))
        };
        Self { order, index, k, amplitude: 1.0 / integral.sqrt(), radius, spherical: true }
    }

    /// `A f(k r)` without the angular part.
    pub fn eval(&self, r: f64) -> f64 {
        let x = self.k * r;
        self.amplitude
            * if self.spherical {
                spherical_j(self.order, x)
            } else {
                bessel_j(self.order, x)
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeShape {
    Slab { x: AxialFactor },
    Rectangular { x: AxialFactor, y: AxialFactor, z: AxialFactor },
    Cylindrical { angular: i32, radial: RadialFactor, axial: AxialFactor },
    Spherical { radial: RadialFactor, azimuthal: i32 },
}

/// One eigenmode `u(r)` with eigenvalue `k^2` and diffusive decay rate
/// `gamma = D k^2` (1/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionMode {
    pub shape: ModeShape,
    pub k: f64,
    pub gamma: f64,
    pub amplitude: f64,
}

impl DiffusionMode {
    fn from_shape(shape: ModeShape, diffusion: f64) -> Self {
        let (k2, amplitude) = match &shape {
            ModeShape::Slab { x } => (x.k * x.k, x.amplitude),
            ModeShape::Rectangular { x, y, z } => (x.k * x.k + y.k * y.k + z.k * z.k, x.amplitude * y.amplitude * z.amplitude),
            ModeShape::Cylindrical { radial, axial, .. } => (radial.k * radial.k + axial.k * axial.k, radial.amplitude * axial.amplitude),
            ModeShape::Spherical { radial, .. } => (radial.k * radial.k, radial.amplitude),
        };
        Self { shape, k: k2.sqrt(), gamma: diffusion * k2, amplitude }
    }

    pub fn label(&self) -> String {
        match &self.shape {
            ModeShape::Slab { x } => x.label(),
            ModeShape::Rectangular { x, y, z } => format!("{}/{}/{}", x.label(), y.label(), z.label()),
            ModeShape::Cylindrical { angular, radial, axial } => format!("n{angular}/r{}/{}", radial.index, axial.label()),
            ModeShape::Spherical { radial, azimuthal } => format!("l{}/r{}/p{azimuthal}", radial.order, radial.index),
        }
    }

    fn sort_key(&self) -> (i64, i64, i64, i64, i64, i64) {
        let ax = |f: &AxialFactor| 2 * f.index as i64 + (f.parity == Parity::Odd) as i64;
        match &self.shape {
            ModeShape::Slab { x } => (ax(x), 0, 0, 0, 0, 0),
            ModeShape::Rectangular { x, y, z } => (ax(x), ax(y), ax(z), 0, 0, 0),
            ModeShape::Cylindrical { angular, radial, axial } => {
                (angular.unsigned_abs() as i64, (*angular < 0) as i64, radial.index as i64, ax(axial), 0, 0)
            }
            ModeShape::Spherical { radial, azimuthal } => {
                (radial.order as i64, radial.index as i64, azimuthal.unsigned_abs() as i64, (*azimuthal < 0) as i64, 0, 0)
            }
        }
    }

    /// `true` for the spatially constant mode.
    pub fn is_uniform(&self) -> bool {
        self.k == 0.0
    }
}

/// Number of roots retained per symmetry class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    /// Roots per class: per parity along each axis of slab and rectangular
    /// cells, per angular order for the cylinder radius, per degree for the sphere.
    pub per_class: usize,
    /// Cylinder axial roots per parity.
    pub axial: usize,
    /// Largest angular order (cylinder) or degree (sphere).
    pub max_order: u32,
    /// Keep only even axial factors.
    pub even_only: bool,
}

impl Truncation {
    pub fn new(per_class: usize) -> Self {
        Self { per_class, axial: per_class, max_order: 0, even_only: false }
    }

    /// Retain `ceil(1/epsilon)` roots per class.
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid(format!("truncation epsilon must lie in (0, 1), got {epsilon}")));
        }
        Ok(Self::new((1.0 / epsilon).ceil() as usize))
    }

    pub fn with_axial(mut self, axial: usize) -> Self {
        self.axial = axial;
        self
    }

    pub fn with_max_order(mut self, max_order: u32) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn even_only(mut self, even_only: bool) -> Self {
        self.even_only = even_only;
        self
    }

    fn validate(&self, geometry: &CellGeometry) -> Result<()> {
        if self.per_class == 0 {
            return Err(invalid("truncation must keep at least one root per class"));
        }
        if matches!(geometry, CellGeometry::Cylindrical { .. }) && self.axial == 0 {
            return Err(invalid("truncation must keep at least one axial root"));
        }
        Ok(())
    }
}

/// Ordered (by decay rate) set of eigenmodes for one cell and wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeBasis {
    pub geometry: CellGeometry,
    pub wall: WallGasSpec,
    pub truncation: Truncation,
    pub modes: Vec<DiffusionMode>,
}

#[derive(Serialize, Deserialize)]
struct BasisDocument {
    format_version: u32,
    basis: ModeBasis,
}

impl ModeBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.modes.iter().map(DiffusionMode::label).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = BasisDocument { format_version: BASIS_FORMAT_VERSION, basis: self.clone() };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        let version = raw.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != BASIS_FORMAT_VERSION {
            return Err(Error::UnsupportedFormat(version));
        }
        let doc: BasisDocument = serde_json::from_value(raw).map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(doc.basis)
    }

    /// Stable content hash, used to key overlap caches.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.geometry.name().hash(&mut h);
        let dims: Vec<u64> = match self.geometry {
            CellGeometry::Slab1d { length } => vec![length.to_bits()],
            CellGeometry::Rectangular { lx, ly, lz } => vec![lx.to_bits(), ly.to_bits(), lz.to_bits()],
            CellGeometry::Cylindrical { radius, length } => vec![radius.to_bits(), length.to_bits()],
            CellGeometry::Spherical { radius } => vec![radius.to_bits()],
        };
        dims.hash(&mut h);
        self.wall.diffusion.to_bits().hash(&mut h);
        self.wall.mean_free_path.to_bits().hash(&mut h);
        self.wall.wall.label().hash(&mut h);
        for m in &self.modes {
            m.label().hash(&mut h);
            m.k.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Drops every mode beyond the first `n`.
    pub fn truncated(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.modes.truncate(n);
        out
    }
}

fn axial_factors(
    geometry: &CellGeometry,
    wall: &WallGasSpec,
    axis: Axis,
    count: usize,
    even_only: bool,
) -> Result<Vec<AxialFactor>> {
    let mut out = Vec::new();
    let parities: &[Parity] = if even_only { &[Parity::Even] } else { &[Parity::Even, Parity::Odd] };
    for &parity in parities {
        let problem = ClassProblem::new(geometry, wall, SymmetryClass::Axial { axis, parity })?;
        for (i, k) in problem.roots(count)?.into_iter().enumerate() {
            out.push(AxialFactor::new(axis, parity, i, k, problem.extent));
        }
    }
    Ok(out)
}

/// Builds the truncated eigenbasis, sorted by ascending decay rate.
pub fn build_basis(geometry: &CellGeometry, wall: &WallGasSpec, truncation: Truncation) -> Result<ModeBasis> {
    geometry.validate()?;
    wall.validate()?;
    truncation.validate(geometry)?;
    let d = wall.diffusion;
    let mut modes = Vec::new();
    match *geometry {
        CellGeometry::Slab1d { .. } => {
            for x in axial_factors(geometry, wall, Axis::X, truncation.per_class, truncation.even_only)? {
                modes.push(DiffusionMode::from_shape(ModeShape::Slab { x }, d));
            }
        }
        CellGeometry::Rectangular { .. } => {
            let fx = axial_factors(geometry, wall, Axis::X, truncation.per_class, truncation.even_only)?;
            let fy = axial_factors(geometry, wall, Axis::Y, truncation.per_class, truncation.even_only)?;
            let fz = axial_factors(geometry, wall, Axis::Z, truncation.per_class, truncation.even_only)?;
            for x in &fx {
                for y in &fy {
                    for z in &fz {
                        modes.push(DiffusionMode::from_shape(ModeShape::Rectangular { x: *x, y: *y, z: *z }, d));
                    }
                }
            }
        }
        CellGeometry::Cylindrical { radius, .. } => {
            let axial = axial_factors(geometry, wall, Axis::Z, truncation.axial, truncation.even_only)?;
            let mut radial_by_order: HashMap<u32, Vec<RadialFactor>> = HashMap::new();
            for order in 0..=truncation.max_order {
                let roots = robin_roots(geometry, wall, SymmetryClass::Radial { order }, truncation.per_class)?;
                let factors = roots.iter().enumerate().map(|(i, &k)| RadialFactor::cylindrical(order, i, k, radius)).collect();
                radial_by_order.insert(order, factors);
            }
            let m = truncation.max_order as i32;
            for angular in -m..=m {
                for radial in &radial_by_order[&angular.unsigned_abs()] {
                    for ax in &axial {
                        modes.push(DiffusionMode::from_shape(ModeShape::Cylindrical { angular, radial: *radial, axial: *ax }, d));
                    }
                }
            }
        }
        CellGeometry::Spherical { radius } => {
            for order in 0..=truncation.max_order {
                let roots = robin_roots(geometry, wall, SymmetryClass::Radial { order }, truncation.per_class)?;
                for (i, &k) in roots.iter().enumerate() {
                    let radial = RadialFactor::spherical(order, i, k, radius);
                    let l = order as i32;
                    for azimuthal in -l..=l {
                        modes.push(DiffusionMode::from_shape(ModeShape::Spherical { radial, azimuthal }, d));
                    }
                }
            }
        }
    }
    modes.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then_with(|| a.sort_key().cmp(&b.sort_key())));
    Ok(ModeBasis { geometry: *geometry, wall: *wall, truncation, modes })
}

/// Evaluates a mode at a Cartesian point (cm) inside the cell.
pub fn eval_mode(mode: &DiffusionMode, geometry: &CellGeometry, point: [f64; 3]) -> Result<Complex64> {
    if !geometry.contains(point) {
        return Err(Error::OutOfDomain(point));
    }
    let [x, y, z] = point;
    Ok(match &mode.shape {
        ModeShape::Slab { x: fx } => Complex64::new(fx.eval(x), 0.0),
        ModeShape::Rectangular { x: fx, y: fy, z: fz } => Complex64::new(fx.eval(x) * fy.eval(y) * fz.eval(z), 0.0),
        ModeShape::Cylindrical { angular, radial, axial } => {
            let rho = x.hypot(y);
            let phi = y.atan2(x);
            Complex64::from_polar(radial.eval(rho) * axial.eval(z), *angular as f64 * phi)
        }
        ModeShape::Spherical { radial, azimuthal } => {
            let r = (x * x + y * y + z * z).sqrt();
            let theta = if r == 0.0 { 0.0 } else { (z / r).clamp(-1.0, 1.0).acos() };
            let phi = y.atan2(x);
            spherical_harmonic(radial.order, *azimuthal, theta, phi) * radial.eval(r)
        }
    })
}

/// Surface-to-volume ratio (1/cm).
pub fn surface_to_volume(geometry: &CellGeometry) -> f64 {
    match *geometry {
        CellGeometry::Slab1d { length } => 2.0 / length,
        CellGeometry::Rectangular { lx, ly, lz } => 2.0 * (lx * ly + ly * lz + lx * lz) / (lx * ly * lz),
        CellGeometry::Cylindrical { radius, length } => 2.0 / length + 2.0 / radius,
        CellGeometry::Spherical { radius } => 3.0 / radius,
    }
}

/// Large-`N` decay rate of the slowest mode, `D (A/V) / h` with the
/// Robin length taken at its large-`N` form. In three dimensions this is
/// `v A / (4 N V)` with `v = 3D/lambda`.
pub fn coated_gamma(wall: &WallGasSpec, geometry: &CellGeometry) -> Result<f64> {
    wall.validate()?;
    geometry.validate()?;
    match wall.wall {
        WallQuality::Preserving => Ok(0.0),
        WallQuality::Depolarizing => Err(invalid("no small-loss asymptote for a fully depolarizing wall")),
        WallQuality::Finite(n) => {
            let h = 2.0 * geometry.robin_factor() * wall.mean_free_path * n;
            Ok(wall.diffusion * surface_to_volume(geometry) / h)
        }
    }
}

/// Geometry-independent estimate `D (pi n / V^{1/d})^2` of the `n`-th decay
/// rate, valid for large `n`. `d` is 1 for a slab, 3 otherwise.
pub fn asymptotic_gamma(geometry: &CellGeometry, diffusion: f64, n: usize) -> Result<f64> {
    geometry.validate()?;
    if !(diffusion.is_finite() && diffusion > 0.0) {
        return Err(invalid(format!("diffusion coefficient must be > 0, got {diffusion}")));
    }
    let k = PI * n as f64 / geometry.volume().powf(1.0 / geometry.spatial_dims() as f64);
    Ok(diffusion * k * k)
}
