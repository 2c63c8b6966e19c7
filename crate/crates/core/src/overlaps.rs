//! Overlap integrals between mode bases and between modes and probe beams.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modes::{AxialFactor, Axis, CellGeometry, ModeBasis, ModeShape, Parity, RadialFactor};
use crate::quadrature::{integrate_with_breaks, oscillation_breaks, Tolerance};
use crate::special::{bessel_j, bessel_j_prime, erf, spherical_harmonic, spherical_j, spherical_j_prime};

/// Real overlap matrix `c[m][n] = <u_m^(rows) | u_n^(cols)>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<f64>,
}

impl OverlapMatrix {
    pub fn nrows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn ncols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.values[m * self.ncols() + n]
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = (self.nrows(), self.ncols());
        let mut values = vec![0.0; r * c];
        for m in 0..r {
            for n in 0..c {
                values[n * r + m] = self.values[m * c + n];
            }
        }
        Self { row_labels: self.col_labels.clone(), col_labels: self.row_labels.clone(), values }
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.nrows(), self.ncols(), &self.values)
    }

    /// Writes a labeled CSV: a header of column labels, then one row per row mode.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Serialization(e.to_string());
        let mut header = vec!["mode".to_string()];
        header.extend(self.col_labels.iter().cloned());
        w.write_record(&header).map_err(io)?;
        for m in 0..self.nrows() {
            let mut rec = vec![self.row_labels[m].clone()];
            rec.extend((0..self.ncols()).map(|n| format!("{:.17e}", self.get(m, n))));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// `sin(d l) / d`, continuous at `d = 0`.
fn sinc_scaled(d: f64, l: f64) -> f64 {
    let x = d * l;
    if x.abs() < 1e-4 {
        l * (1.0 - x * x / 6.0 + x.powi(4) / 120.0)
    } else {
        x.sin() / d
    }
}

fn axial_closed(a: &AxialFactor, b: &AxialFactor) -> f64 {
    if a.parity != b.parity {
        return 0.0;
    }
    let l = a.half_length;
    let diff = sinc_scaled(a.k - b.k, l);
    let sum = sinc_scaled(a.k + b.k, l);
    a.amplitude
        * b.amplitude
        * match a.parity {
            Parity::Even => diff + sum,
            Parity::Odd => diff - sum,
        }
}

fn axial_quadrature(a: &AxialFactor, b: &AxialFactor) -> f64 {
    let l = a.half_length;
    let breaks = oscillation_breaks(-l, l, a.k.max(b.k));
    integrate_with_breaks(|x| a.eval(x) * b.eval(x), -l, l, &breaks, Tolerance { abs: 1e-13, rel: 1e-12, ..Tolerance::default() }).value
}

fn profile(f: &RadialFactor, x: f64) -> (f64, f64) {
    if f.spherical {
        (spherical_j(f.order, x), spherical_j_prime(f.order, x))
    } else {
        (bessel_j(f.order, x), bessel_j_prime(f.order, x))
    }
}

/// Closed-form radial overlap, including the angular measure for cylinders.
fn radial_closed(a: &RadialFactor, b: &RadialFactor) -> f64 {
    let r = a.radius;
    let close = (a.k - b.k).abs() <= 1e-7 * a.k.max(b.k).max(1.0 / r);
    if close && a.k != b.k {
        return radial_quadrature(a, b);
    }
    if a.k == b.k {
        // identical factor, normalized by construction
        return 1.0;
    }
    let weight = if a.spherical { r * r } else { r };
    let (fa, fpa) = profile(a, a.k * r);
    let (fb, fpb) = profile(b, b.k * r);
    let integral = weight * (b.k * fa * fpb - a.k * fpa * fb) / (a.k * a.k - b.k * b.k);
    let measure = if a.spherical { 1.0 } else { 2.0 * PI };
    measure * a.amplitude * b.amplitude * integral
}

fn radial_quadrature(a: &RadialFactor, b: &RadialFactor) -> f64 {
    let r = a.radius;
    let breaks = oscillation_breaks(0.0, r, a.k.max(b.k));
    let tol = Tolerance { abs: 1e-13, rel: 1e-12, ..Tolerance::default() };
    if a.spherical {
        integrate_with_breaks(|x| a.eval(x) * b.eval(x) * x * x, 0.0, r, &breaks, tol).value
    } else {
        2.0 * PI * integrate_with_breaks(|x| a.eval(x) * b.eval(x) * x, 0.0, r, &breaks, tol).value
    }
}

#[derive(Clone, Copy)]
enum Route {
    Closed,
    Quadrature,
}

fn overlap_with(a: &ModeBasis, b: &ModeBasis, route: Route) -> Result<OverlapMatrix> {
    if a.geometry != b.geometry {
        return Err(Error::GeometryMismatch);
    }
    let axial = |x: &AxialFactor, y: &AxialFactor| match route {
        Route::Closed => axial_closed(x, y),
        Route::Quadrature => {
            if x.parity != y.parity {
                0.0
            } else {
                axial_quadrature(x, y)
            }
        }
    };
    let radial = |x: &RadialFactor, y: &RadialFactor| match route {
        Route::Closed => radial_closed(x, y),
        Route::Quadrature => radial_quadrature(x, y),
    };
    let mut axial_memo: HashMap<(Axis, Parity, usize, usize), f64> = HashMap::new();
    let mut radial_memo: HashMap<(u32, usize, usize), f64> = HashMap::new();
    let mut ax = |x: &AxialFactor, y: &AxialFactor| -> f64 {
        if x.parity != y.parity {
            return 0.0;
        }
        *axial_memo.entry((x.axis, x.parity, x.index, y.index)).or_insert_with(|| axial(x, y))
    };
    let mut values = Vec::with_capacity(a.len() * b.len());
    for ma in &a.modes {
        for mb in &b.modes {
            let v = match (&ma.shape, &mb.shape) {
                (ModeShape::Slab { x: xa }, ModeShape::Slab { x: xb }) => ax(xa, xb),
                (ModeShape::Rectangular { x: xa, y: ya, z: za }, ModeShape::Rectangular { x: xb, y: yb, z: zb }) => {
                    let first = ax(xa, xb);
                    if first == 0.0 {
                        0.0
                    } else {
                        first * ax(ya, yb) * ax(za, zb)
                    }
                }
                (
                    ModeShape::Cylindrical { angular: na, radial: ra, axial: aa },
                    ModeShape::Cylindrical { angular: nb, radial: rb, axial: ab },
                ) => {
                    if na != nb || aa.parity != ab.parity {
                        0.0
                    } else {
                        let rv = *radial_memo.entry((ra.order, ra.index, rb.index)).or_insert_with(|| radial(ra, rb));
                        rv * ax(aa, ab)
                    }
                }
                (
                    ModeShape::Spherical { radial: ra, azimuthal: pa },
                    ModeShape::Spherical { radial: rb, azimuthal: pb },
                ) => {
                    if ra.order != rb.order || pa != pb {
                        0.0
                    } else {
                        *radial_memo.entry((ra.order, ra.index, rb.index)).or_insert_with(|| radial(ra, rb))
                    }
                }
                _ => return Err(Error::GeometryMismatch),
            };
            values.push(v);
        }
    }
    Ok(OverlapMatrix { row_labels: a.labels(), col_labels: b.labels(), values })
}

/// Overlaps between two bases on the same cell, from closed-form
/// Sturm-Liouville expressions.
pub fn mode_overlap(a: &ModeBasis, b: &ModeBasis) -> Result<OverlapMatrix> {
    overlap_with(a, b, Route::Closed)
}

/// Same overlaps as [`mode_overlap`], evaluated by adaptive quadrature.
pub fn mode_overlap_quadrature(a: &ModeBasis, b: &ModeBasis) -> Result<OverlapMatrix> {
    overlap_with(a, b, Route::Quadrature)
}

/// Memoizes overlap matrices by basis fingerprint.
#[derive(Default)]
pub struct OverlapCache {
    entries: HashMap<(u64, u64), Arc<OverlapMatrix>>,
}

impl OverlapCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(&mut self, a: &ModeBasis, b: &ModeBasis) -> Result<Arc<OverlapMatrix>> {
        let key = (a.fingerprint(), b.fingerprint());
        if let Some(m) = self.entries.get(&key) {
            return Ok(m.clone());
        }
        let m = Arc::new(mode_overlap(a, b)?);
        self.entries.insert(key, m.clone());
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Gaussian probe `I0 exp(-2 rho^2 / w0^2)`, uniform along its propagation
/// axis and normalized so that the integral of `I^2` over the cell is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeProfile {
    pub waist: f64,
    pub axis: Axis,
}

impl ProbeProfile {
    pub fn gaussian(waist: f64, axis: Axis) -> Result<Self> {
        if !(waist.is_finite() && waist > 0.0) {
            return Err(invalid(format!("beam waist must be > 0, got {waist}")));
        }
        Ok(Self { waist, axis })
    }

    fn check(&self, geometry: &CellGeometry) -> Result<()> {
        let ok = match geometry {
            CellGeometry::Slab1d { .. } => self.axis != Axis::X,
            CellGeometry::Rectangular { .. } => true,
            CellGeometry::Cylindrical { .. } | CellGeometry::Spherical { .. } => self.axis == Axis::Z,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::AxisMismatch(self.axis))
        }
    }

    /// `int exp(-4 x^2/w0^2) dx` over `[-l, l]`.
    fn gauss_sq_1d(&self, l: f64) -> f64 {
        let w = self.waist;
        0.5 * w * PI.sqrt() * erf(2.0 * l / w)
    }

    /// Peak intensity `I0` fixed by the unit-norm condition.
    pub fn peak_intensity(&self, geometry: &CellGeometry) -> Result<f64> {
        self.check(geometry)?;
        let w = self.waist;
        let inv_sq = match *geometry {
            CellGeometry::Slab1d { length } => self.gauss_sq_1d(0.5 * length),
            CellGeometry::Rectangular { lx, ly, lz } => {
                let l = [lx, ly, lz];
                let a = self.axis.index();
                (0..3).map(|i| if i == a { l[i] } else { self.gauss_sq_1d(0.5 * l[i]) }).product()
            }
            CellGeometry::Cylindrical { radius, length } => {
                PI * length * w * w * -(-4.0 * radius * radius / (w * w)).exp_m1() / 4.0
            }
            CellGeometry::Spherical { radius } => {
                let f = |rho: f64| 4.0 * PI * rho * (radius * radius - rho * rho).max(0.0).sqrt() * (-4.0 * rho * rho / (w * w)).exp();
                integrate_with_breaks(f, 0.0, radius, &[], Tolerance { abs: 1e-14, rel: 1e-12, ..Tolerance::default() }).value
            }
        };
        Ok(1.0 / inv_sq.sqrt())
    }

    /// Transverse distance of a point from the beam axis.
    fn transverse(&self, geometry: &CellGeometry, p: [f64; 3]) -> f64 {
        match geometry {
            CellGeometry::Slab1d { .. } => p[0].abs(),
            _ => {
                let a = self.axis.index();
                let (u, v) = match a {
                    0 => (p[1], p[2]),
                    1 => (p[0], p[2]),
                    _ => (p[0], p[1]),
                };
                u.hypot(v)
            }
        }
    }

    /// Normalized intensity at a point.
    pub fn intensity(&self, geometry: &CellGeometry, p: [f64; 3]) -> Result<f64> {
        let i0 = self.peak_intensity(geometry)?;
        let rho = self.transverse(geometry, p);
        Ok(i0 * (-2.0 * rho * rho / (self.waist * self.waist)).exp())
    }

    /// Intensity with a precomputed peak value.
    pub fn intensity_with_peak(&self, geometry: &CellGeometry, i0: f64, p: [f64; 3]) -> f64 {
        let rho = self.transverse(geometry, p);
        i0 * (-2.0 * rho * rho / (self.waist * self.waist)).exp()
    }

    /// Distance beyond which the Gaussian is below `1e-40` of its peak.
    fn reach(&self) -> f64 {
        self.waist * (0.5 * 40.0 * std::f64::consts::LN_10).sqrt()
    }
}

fn quad_tol() -> Tolerance {
    Tolerance { abs: 1e-13, rel: 1e-11, ..Tolerance::default() }
}

/// `int A f(kx) dx` over the factor's interval.
fn axial_uniform(f: &AxialFactor) -> f64 {
    match f.parity {
        Parity::Odd => 0.0,
        Parity::Even => 2.0 * f.amplitude * sinc_scaled(f.k, f.half_length),
    }
}

/// `int exp(-2x^2/w0^2) A f(kx) dx` over the factor's interval.
fn axial_gaussian(f: &AxialFactor, probe: &ProbeProfile) -> f64 {
    if f.parity == Parity::Odd {
        return 0.0;
    }
    let w = probe.waist;
    let l = f.half_length;
    if f.k == 0.0 {
        return f.amplitude * w * (PI / 2.0).sqrt() * erf(2f64.sqrt() * l / w);
    }
    let top = l.min(probe.reach());
    let breaks = oscillation_breaks(0.0, top, f.k);
    2.0 * integrate_with_breaks(|x| (-2.0 * x * x / (w * w)).exp() * f.eval(x), 0.0, top, &breaks, quad_tol()).value
}

/// `2 pi A int exp(-2 rho^2/w0^2) J_0(k rho) rho d rho` for an order-zero radial factor.
fn radial_gaussian(f: &RadialFactor, probe: &ProbeProfile) -> f64 {
    let w = probe.waist;
    let r = f.radius;
    if f.k == 0.0 {
        return 2.0 * PI * f.amplitude * 0.25 * w * w * -(-2.0 * r * r / (w * w)).exp_m1();
    }
    let top = r.min(probe.reach());
    let breaks = oscillation_breaks(0.0, top, f.k);
    2.0 * PI * integrate_with_breaks(|x| (-2.0 * x * x / (w * w)).exp() * f.eval(x) * x, 0.0, top, &breaks, quad_tol()).value
}

fn spherical_gaussian(f: &RadialFactor, probe: &ProbeProfile) -> f64 {
    let w = probe.waist;
    let r_max = f.radius;
    let l = f.order;
    let y = |theta: f64| spherical_harmonic(l, 0, theta, 0.0).re;
    let inner = |r: f64| {
        let g = |theta: f64| {
            let s = theta.sin();
            s * y(theta) * (-2.0 * r * r * s * s / (w * w)).exp()
        };
        integrate_with_breaks(g, 0.0, PI, &oscillation_breaks(0.0, PI, l as f64), quad_tol()).value
    };
    let breaks = oscillation_breaks(0.0, r_max, f.k);
    2.0 * PI * integrate_with_breaks(|r| r * r * f.eval(r) * inner(r), 0.0, r_max, &breaks, quad_tol()).value
}

/// Overlaps `I_n = int I(r) u_n*(r) dV` of a normalized probe with every mode.
pub fn probe_overlap(basis: &ModeBasis, probe: &ProbeProfile) -> Result<Vec<f64>> {
    let geometry = &basis.geometry;
    let i0 = probe.peak_intensity(geometry)?;
    let mut axial_memo: HashMap<(Axis, Parity, usize), f64> = HashMap::new();
    let mut radial_memo: HashMap<(u32, usize), f64> = HashMap::new();
    let mut along = |f: &AxialFactor| -> f64 {
        *axial_memo.entry((f.axis, f.parity, f.index)).or_insert_with(|| {
            if f.axis == probe.axis {
                axial_uniform(f)
            } else {
                axial_gaussian(f, probe)
            }
        })
    };
    let mut out = Vec::with_capacity(basis.len());
    for mode in &basis.modes {
        let v = match &mode.shape {
            ModeShape::Slab { x } => axial_gaussian(x, probe),
            ModeShape::Rectangular { x, y, z } => {
                let a = along(x);
                if a == 0.0 {
                    0.0
                } else {
                    a * along(y) * along(z)
                }
            }
            ModeShape::Cylindrical { angular, radial, axial } => {
                if *angular != 0 || axial.parity == Parity::Odd {
                    0.0
                } else {
                    *radial_memo.entry((0, radial.index)).or_insert_with(|| radial_gaussian(radial, probe)) * axial_uniform(axial)
                }
            }
            ModeShape::Spherical { radial, azimuthal } => {
                if *azimuthal != 0 || radial.order % 2 == 1 {
                    0.0
                } else {
                    *radial_memo.entry((radial.order, radial.index)).or_insert_with(|| spherical_gaussian(radial, probe))
                }
            }
        };
        out.push(i0 * v);
    }
    Ok(out)
}

/// Overlaps of the normalized uniform profile `1/sqrt(V)` with every mode.
pub fn uniform_overlap(basis: &ModeBasis) -> Vec<f64> {
    let norm = 1.0 / basis.geometry.volume().sqrt();
    basis
        .modes
        .iter()
        .map(|mode| {
            norm * match &mode.shape {
                ModeShape::Slab { x } => axial_uniform(x),
                ModeShape::Rectangular { x, y, z } => axial_uniform(x) * axial_uniform(y) * axial_uniform(z),
                ModeShape::Cylindrical { angular, radial, axial } => {
                    if *angular != 0 {
                        0.0
                    } else {
                        radial_uniform(radial) * axial_uniform(axial)
                    }
                }
                ModeShape::Spherical { radial, azimuthal } => {
                    if *azimuthal != 0 || radial.order != 0 {
                        0.0
                    } else {
                        radial_uniform(radial)
                    }
                }
            }
        })
        .collect()
}

/// Integral of a radial factor over the disk (cylinder, with angular
/// measure) or ball (sphere, with `Y_00`).
pub(crate) fn radial_uniform(f: &RadialFactor) -> f64 {
    let r = f.radius;
    let x = f.k * r;
    if f.spherical {
        let radial = if f.k == 0.0 { r.powi(3) / 3.0 } else { (x.sin() - x * x.cos()) / f.k.powi(3) };
        (4.0 * PI).sqrt() * f.amplitude * radial
    } else {
        let radial = if f.k == 0.0 { 0.5 * r * r } else { r * bessel_j(1, x) / f.k };
        2.0 * PI * f.amplitude * radial
    }
}

/// Effective number of probed atoms and the projection-noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamAtoms {
    /// `n (int I)^2 / int I^2`.
    pub n_beam: f64,
    /// Standard quantum limit of the quadrature variance, `n_beam / 4`.
    pub sql_variance: f64,
    /// Probed volume `n_beam / n` (cm^3).
    pub volume: f64,
}

/// Beam atom number for a Gaussian probe along a cylinder's axis, with atomic density `density` (1/cm^3).
pub fn beam_atom_number(probe: &ProbeProfile, geometry: &CellGeometry, density: f64) -> Result<BeamAtoms> {
    let CellGeometry::Cylindrical { radius, length } = *geometry else {
        return Err(invalid("beam atom number is defined for cylindrical cells"));
    };
    probe.check(geometry)?;
    if !(density.is_finite() && density >= 0.0) {
        return Err(invalid(format!("atomic density must be >= 0, got {density}")));
    }
    let w2 = probe.waist * probe.waist;
    let r2 = radius * radius;
    let one = -(-2.0 * r2 / w2).exp_m1();
    let two = -(-4.0 * r2 / w2).exp_m1();
    let volume = PI * length * w2 * one * one / two;
    let n_beam = density * volume;
    Ok(BeamAtoms { n_beam, sql_variance: n_beam / 4.0, volume })
}
