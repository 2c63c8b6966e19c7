//! Mode dynamics, spin-noise spectra and squeezing decay.
//!
//! Quadratures follow `x = (a + a^dag)/2`, so the vacuum variance is `1/4`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modes::{robin_roots, CellGeometry, ModeBasis, SymmetryClass, WallGasSpec};
use crate::overlaps::{probe_overlap, uniform_overlap, ProbeProfile};
use crate::quadrature::{integrate, Tolerance};

/// Larmor precession frequency `f0` (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub larmor_hz: f64,
}

impl FieldSpec {
    pub fn new(larmor_hz: f64) -> Result<Self> {
        if !larmor_hz.is_finite() {
            return Err(invalid("Larmor frequency must be finite"));
        }
        Ok(Self { larmor_hz })
    }

    /// Field magnitude (G) times gyromagnetic ratio (Hz/G).
    pub fn from_field(field_gauss: f64, gyromagnetic_hz_per_gauss: f64) -> Result<Self> {
        Self::new(field_gauss * gyromagnetic_hz_per_gauss)
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.larmor_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinStatistics {
    /// Highly polarized ensemble, or spin 1/2.
    Polarized,
    /// Unpolarized ensemble of spin-`spin` atoms.
    Unpolarized { spin: f64 },
}

impl SpinStatistics {
    /// Spectral prefactor `P~`.
    pub fn p_tilde(&self) -> f64 {
        match *self {
            SpinStatistics::Polarized => 1.0,
            SpinStatistics::Unpolarized { spin } => 2.0 * (spin + 1.0) / 3.0,
        }
    }
}

/// Mean amplitude `a0 exp(-(i omega0 + gamma) t)`.
pub fn mode_evolution(a0: Complex64, gamma: f64, omega0: f64, t: f64) -> Complex64 {
    a0 * Complex64::new(-gamma * t, -omega0 * t).exp()
}

/// Variance of the noise admitted by a mode up to time `t`, `1 - exp(-2 gamma t)`.
pub fn noise_covariance(gamma: f64, t: f64) -> f64 {
    -(-2.0 * gamma * t).exp_m1()
}

/// Quadrature variance of a single mode with initial variance `x2_0`.
pub fn mode_variance(x2_0: f64, gamma: f64, t: f64) -> f64 {
    let keep = (-2.0 * gamma * t).exp();
    x2_0 * keep + 0.25 * noise_covariance(gamma, t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMode {
    pub label: String,
    pub weight: f64,
    pub gamma: f64,
}

/// Squared overlaps `|I_n|^2` paired with decay rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeWeights {
    pub modes: Vec<WeightedMode>,
}

impl ModeWeights {
    fn from_overlaps(basis: &ModeBasis, overlaps: &[f64]) -> Self {
        let modes = basis
            .modes
            .iter()
            .zip(overlaps)
            .filter(|(_, i)| **i != 0.0)
            .map(|(m, i)| WeightedMode { label: m.label(), weight: i * i, gamma: m.gamma })
            .collect();
        Self { modes }
    }

    /// Weights of a normalized Gaussian probe. Modes with exactly zero overlap are dropped.
    pub fn from_probe(basis: &ModeBasis, probe: &ProbeProfile) -> Result<Self> {
        Ok(Self::from_overlaps(basis, &probe_overlap(basis, probe)?))
    }

    /// Weights of the normalized uniform profile.
    pub fn from_uniform(basis: &ModeBasis) -> Self {
        Self::from_overlaps(basis, &uniform_overlap(basis))
    }

    /// Weights of a uniform profile over a cylinder cross-section, expanded
    /// in the first `count` axisymmetric radial modes only.
    pub fn radial_uniform(geometry: &CellGeometry, wall: &WallGasSpec, count: usize) -> Result<Self> {
        let CellGeometry::Cylindrical { radius, .. } = *geometry else {
            return Err(invalid("radial weights need a cylindrical cell"));
        };
        let roots = robin_roots(geometry, wall, SymmetryClass::Radial { order: 0 }, count)?;
        let area = PI * radius * radius;
        let modes = roots
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let x = k * radius;
                let (num, den) = if k == 0.0 {
                    (0.5 * radius * radius, 0.5 * radius * radius)
                } else {
                    let j0 = crate::special::bessel_j(0, x);
                    let j1 = crate::special::bessel_j(1, x);
                    (radius * j1 / k, 0.5 * radius * radius * (j1 * j1 + j0 * j0))
                };
                // (2 pi int J0 rho) / sqrt(2 pi int J0^2 rho) / sqrt(area)
                let overlap = 2.0 * PI * num / (2.0 * PI * den).sqrt() / area.sqrt();
                WeightedMode { label: format!("r{i}"), weight: overlap * overlap, gamma: wall.diffusion * k * k }
            })
            .collect();
        Ok(Self { modes })
    }

    pub fn total(&self) -> f64 {
        self.modes.iter().map(|m| m.weight).sum()
    }

    /// Adds a uniform homogeneous decay rate to every mode.
    pub fn with_extra_decay(&self, gamma: f64) -> Self {
        let modes = self.modes.iter().map(|m| WeightedMode { gamma: m.gamma + gamma, ..m.clone() }).collect();
        Self { modes }
    }

    /// Removes modes whose weight is below `relative * total`.
    pub fn pruned(&self, relative: f64) -> Self {
        let cut = relative * self.total();
        Self { modes: self.modes.iter().filter(|m| m.weight >= cut).cloned().collect() }
    }

    /// `sum_n w_n exp(-gamma_n t)`.
    pub fn decay_sum(&self, t: f64) -> f64 {
        self.modes.iter().map(|m| m.weight * (-m.gamma * t).exp()).sum()
    }
}

/// Decay rate `pi^2 D / w0^2` of the single-mode reference.
pub fn beam_reference_rate(diffusion: f64, waist: f64) -> f64 {
    PI * PI * diffusion / (waist * waist)
}

/// Spectral density of the quadrature `x` on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub frequencies: Vec<f64>,
    pub sxx: Vec<f64>,
    /// Single Lorentzian with the same total power, if a reference rate was set.
    pub reference: Option<Vec<f64>>,
    pub reference_gamma: Option<f64>,
    pub f0: f64,
    pub p_tilde: f64,
    /// Mode weights and rates behind an analytic spectrum; empty for sampled spectra.
    pub weights: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Power carried by modes with zero decay rate (a delta at `f0`, not on the grid).
    pub singular_power: f64,
}

fn lorentzian(gamma: f64, df: f64) -> f64 {
    2.0 * gamma / (gamma * gamma + 4.0 * PI * PI * df * df)
}

impl SpectrumResult {
    pub fn is_analytic(&self) -> bool {
        !self.weights.is_empty()
    }

    /// Analytic spectral density at an arbitrary frequency.
    pub fn evaluate(&self, f: f64) -> f64 {
        let df = f - self.f0;
        let s: f64 = self
            .weights
            .iter()
            .zip(&self.gammas)
            .filter(|(_, g)| **g > 0.0)
            .map(|(w, g)| w * lorentzian(*g, df))
            .sum();
        0.25 * self.p_tilde * s
    }

    /// Total power `P~ sum w / 4`, including any singular part.
    pub fn total_power(&self) -> f64 {
        0.25 * self.p_tilde * self.weights.iter().sum::<f64>()
    }
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(format!("{what} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(format!("{what} grid must be finite and strictly increasing")));
    }
    Ok(())
}

/// Lorentzian-sum spectrum for precomputed weights.
pub fn lorentzian_spectrum(
    weights: &ModeWeights,
    field: FieldSpec,
    stats: SpinStatistics,
    fgrid: &[f64],
    reference_gamma: Option<f64>,
) -> Result<SpectrumResult> {
    check_grid(fgrid, "frequency")?;
    let p = stats.p_tilde();
    let f0 = field.larmor_hz;
    let w: Vec<f64> = weights.modes.iter().map(|m| m.weight).collect();
    let g: Vec<f64> = weights.modes.iter().map(|m| m.gamma).collect();
    let singular: f64 = w.iter().zip(&g).filter(|(_, g)| **g <= 0.0).map(|(w, _)| 0.25 * p * w).sum();
    let mut out = SpectrumResult {
        frequencies: fgrid.to_vec(),
        sxx: Vec::new(),
        reference: None,
        reference_gamma,
        f0,
        p_tilde: p,
        weights: w,
        gammas: g,
        singular_power: singular,
    };
    out.sxx = fgrid.par_iter().map(|&f| out.evaluate(f)).collect();
    if let Some(gw) = reference_gamma {
        let power = out.total_power();
        out.reference = Some(fgrid.iter().map(|&f| power * lorentzian(gw, f - f0)).collect());
    }
    Ok(out)
}

/// Spin-noise spectrum of a Gaussian probe, with the `pi^2 D / w0^2` reference.
pub fn spin_noise_spectrum(
    basis: &ModeBasis,
    probe: &ProbeProfile,
    field: FieldSpec,
    stats: SpinStatistics,
    fgrid: &[f64],
) -> Result<SpectrumResult> {
    let weights = ModeWeights::from_probe(basis, probe)?;
    let gw = beam_reference_rate(basis.wall.diffusion, probe.waist);
    lorentzian_spectrum(&weights, field, stats, fgrid, Some(gw))
}

/// Half width at half maximum of an analytic spectrum.
fn analytic_half_width(s: &SpectrumResult) -> Result<f64> {
    let peak = s.evaluate(s.f0);
    if !(peak > 0.0) {
        return Err(Error::FlatSpectrum);
    }
    let half = 0.5 * peak;
    let gmin = s.gammas.iter().copied().filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
    let mut hi = gmin / (2.0 * PI);
    let mut lo = 0.0;
    let mut guard = 0;
    while s.evaluate(s.f0 + hi) > half {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::FlatSpectrum);
        }
    }
    crate::roots::brent(|d| s.evaluate(s.f0 + d) - half, lo, hi, 1e-14 * hi)
}

/// Sampled spectrum half-maximum crossings, linearly interpolated.
fn sampled_crossings(s: &SpectrumResult) -> Result<(f64, f64, usize)> {
    let (imax, &peak) = s.sxx.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).ok_or(Error::FlatSpectrum)?;
    let half = 0.5 * peak;
    let f = &s.frequencies;
    let mut left = None;
    for i in (0..imax).rev() {
        if s.sxx[i] <= half {
            let t = (half - s.sxx[i]) / (s.sxx[i + 1] - s.sxx[i]);
            left = Some(f[i] + t * (f[i + 1] - f[i]));
            break;
        }
    }
    let mut right = None;
    for i in imax + 1..s.sxx.len() {
        if s.sxx[i] <= half {
            let t = (s.sxx[i - 1] - half) / (s.sxx[i - 1] - s.sxx[i]);
            right = Some(f[i - 1] + t * (f[i] - f[i - 1]));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Ok((l, r, imax)),
        _ => Err(Error::FlatSpectrum),
    }
}

/// Full width at half maximum (Hz).
pub fn full_width_half_max(s: &SpectrumResult) -> Result<f64> {
    if s.is_analytic() {
        let hw = analytic_half_width(s)?;
        let (lo, hi) = (s.frequencies[0], s.frequencies[s.frequencies.len() - 1]);
        if lo > s.f0 - hw || hi < s.f0 + hw {
            return Err(Error::FlatSpectrum);
        }
        Ok(2.0 * hw)
    } else {
        let (l, r, _) = sampled_crossings(s)?;
        Ok(r - l)
    }
}

fn trapezoid(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len().saturating_sub(1) {
        let (a, b) = (x[i].max(lo), x[i + 1].min(hi));
        if b <= a {
            continue;
        }
        let slope = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        let ya = y[i] + slope * (a - x[i]);
        let yb = y[i] + slope * (b - x[i]);
        acc += 0.5 * (ya + yb) * (b - a);
    }
    acc
}

/// Fraction of the total noise power inside the full width at half maximum
/// around `f0`. Analytic spectra use the closed-form Lorentzian integrals
/// and the analytic total; sampled spectra use trapezoidal sums on the grid.
pub fn noise_content(s: &SpectrumResult) -> Result<f64> {
    if s.is_analytic() {
        let hw = 0.5 * full_width_half_max(s)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for (w, g) in s.weights.iter().zip(&s.gammas) {
            den += w;
            num += if *g > 0.0 { w * 2.0 / PI * (2.0 * PI * hw / g).atan() } else { *w };
        }
        Ok(num / den)
    } else {
        let (l, r, _) = sampled_crossings(s)?;
        let f = &s.frequencies;
        let total = trapezoid(f, &s.sxx, f[0], f[f.len() - 1]);
        Ok(trapezoid(f, &s.sxx, l, r) / total)
    }
}

/// Noise content from adaptive quadrature of the analytic spectrum over
/// log-spaced offsets from `f0`, as an independent check of [`noise_content`].
pub fn noise_content_by_quadrature(s: &SpectrumResult) -> Result<f64> {
    if !s.is_analytic() {
        return Err(invalid("quadrature needs an analytic spectrum"));
    }
    let hw = analytic_half_width(s)?;
    let gmax = s.gammas.iter().copied().fold(0.0, f64::max);
    let gmin = s.gammas.iter().copied().filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
    // integrate over u = ln(offset); both halves are equal by symmetry
    let u_lo = (gmin / (2.0 * PI)).ln() - 40.0;
    let u_hi = (gmax / (2.0 * PI)).ln() + 40.0;
    let tol = Tolerance { abs: 0.0, rel: 1e-11, max_intervals: 20_000 };
    let density = |u: f64| {
        let d = u.exp();
        s.evaluate(s.f0 + d) * d
    };
    let inside = 2.0 * integrate(density, u_lo, hw.ln(), tol).value;
    let outside = 2.0 * integrate(density, hw.ln(), u_hi, tol).value;
    Ok((inside + s.singular_power) / (inside + outside + s.singular_power))
}

/// Variance trace of the probed quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezingResult {
    pub times: Vec<f64>,
    pub variance: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub reference_gamma: Option<f64>,
    pub x2_0: f64,
    /// `sum |I_n|^2` of the retained modes.
    pub captured_weight: f64,
    /// Time at which the squeezing in dB has halved, if reached.
    pub lifetime: Option<f64>,
    pub reference_lifetime: Option<f64>,
}

/// Squeezing in dB relative to the vacuum variance; positive when squeezed.
pub fn squeezing_db(variance: f64) -> f64 {
    -10.0 * (variance / 0.25).log10()
}

fn multimode_variance(weights: &ModeWeights, x2_0: f64, t: f64) -> f64 {
    let s = weights.decay_sum(t);
    s * s * (x2_0 - 0.25) + 0.25
}

/// Time at which `var(t)` first reaches the half-dB target, found by bracketing
/// on a doubling grid and refining with Brent's method.
fn half_db_time(var: impl Fn(f64) -> f64, x2_0: f64, scale: f64) -> Option<f64> {
    if x2_0 == 0.25 || !(scale > 0.0) {
        return None;
    }
    let target_db = 0.5 * squeezing_db(var(0.0));
    let g = |t: f64| squeezing_db(var(t)).abs() - target_db.abs();
    if g(0.0) <= 0.0 {
        return Some(0.0);
    }
    let mut lo = 0.0;
    let mut hi = scale;
    for _ in 0..200 {
        if g(hi) <= 0.0 {
            return crate::roots::brent(g, lo, hi, 1e-13 * hi).ok();
        }
        lo = hi;
        hi *= 2.0;
    }
    None
}

/// Evaluates the multimode decay for given weights.
pub fn squeezing_from_weights(
    weights: &ModeWeights,
    x2_0: f64,
    tgrid: &[f64],
    reference_gamma: Option<f64>,
) -> Result<SqueezingResult> {
    check_grid(tgrid, "time")?;
    if tgrid[0] < 0.0 {
        return Err(invalid("times must be non-negative"));
    }
    if !(x2_0.is_finite() && x2_0 > 0.0) {
        return Err(invalid(format!("initial variance must be > 0, got {x2_0}")));
    }
    let variance = tgrid.par_iter().map(|&t| multimode_variance(weights, x2_0, t)).collect();
    let reference = reference_gamma.map(|g| tgrid.iter().map(|&t| mode_variance(x2_0, g, t)).collect());
    let gmax = weights.modes.iter().map(|m| m.gamma).fold(0.0, f64::max);
    let lifetime = half_db_time(|t| multimode_variance(weights, x2_0, t), x2_0, 1e-3 / gmax.max(1e-300));
    let reference_lifetime = reference_gamma.and_then(|g| half_db_time(|t| mode_variance(x2_0, g, t), x2_0, 1e-3 / g));
    Ok(SqueezingResult {
        times: tgrid.to_vec(),
        variance,
        reference,
        reference_gamma,
        x2_0,
        captured_weight: weights.total(),
        lifetime,
        reference_lifetime,
    })
}

/// Decay of an initially squeezed Gaussian-probe quadrature, with the
/// single-exponential `pi^2 D / w0^2` reference.
pub fn squeezing_decay(basis: &ModeBasis, probe: &ProbeProfile, x2_0: f64, tgrid: &[f64]) -> Result<SqueezingResult> {
    let weights = ModeWeights::from_probe(basis, probe)?;
    let gw = beam_reference_rate(basis.wall.diffusion, probe.waist);
    squeezing_from_weights(&weights, x2_0, tgrid, Some(gw))
}
