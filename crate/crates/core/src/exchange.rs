//! Coherent excitation exchange between alkali and noble-gas diffusion modes
//! in a spherical cell.
//!
//! With `a_m` the alkali and `b_n` the noble-gas mode amplitudes,
//!
//! ```text
//! da_m/dt = -(G_am + G_a) a_m - i J sum_n c_mn b_n
//! db_n/dt = -G_bn b_n        - i J sum_m c_mn a_m
//! ```
//!
//! The overlaps `c_mn` are real, so substituting `b = -i q` gives a real
//! linear system in `(a, q)`, propagated with the matrix exponential.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modes::{build_basis, CellGeometry, ModeBasis, Truncation, WallGasSpec, WallQuality};
use crate::ode::{dopri5, Dopri5Options};
use crate::overlaps::{mode_overlap, OverlapCache};

/// One atomic species: gas/wall parameters plus a homogeneous decay rate (1/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeciesSpec {
    pub gas: WallGasSpec,
    pub homogeneous_decay: f64,
}

impl SpeciesSpec {
    pub fn alkali(diffusion: f64, mean_free_path: f64, wall: WallQuality, homogeneous_decay: f64) -> Result<Self> {
        let s = Self { gas: WallGasSpec::new(diffusion, mean_free_path, wall)?, homogeneous_decay };
        s.validate()?;
        Ok(s)
    }

    /// Noble-gas spins ignore the walls, so the boundary is Neumann.
    pub fn noble_gas(diffusion: f64, mean_free_path: f64) -> Result<Self> {
        Ok(Self { gas: WallGasSpec::new(diffusion, mean_free_path, WallQuality::Preserving)?, homogeneous_decay: 0.0 })
    }

    fn validate(&self) -> Result<()> {
        self.gas.validate()?;
        if !(self.homogeneous_decay >= 0.0 && self.homogeneous_decay.is_finite()) {
            return Err(invalid(format!("homogeneous decay must be >= 0, got {}", self.homogeneous_decay)));
        }
        Ok(())
    }
}

/// Physical setup of the two-species problem, without the coupling rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeSpec {
    pub radius: f64,
    pub alkali: SpeciesSpec,
    pub noble: SpeciesSpec,
    pub alkali_modes: usize,
    pub noble_modes: usize,
}

impl ExchangeSpec {
    pub fn validate(&self) -> Result<()> {
        CellGeometry::sphere(self.radius)?;
        self.alkali.validate()?;
        self.noble.validate()?;
        if self.noble.gas.wall != WallQuality::Preserving {
            return Err(invalid("noble-gas wall must be spin preserving"));
        }
        if self.alkali_modes == 0 || self.noble_modes == 0 {
            return Err(invalid("both species need at least one mode"));
        }
        Ok(())
    }

    pub fn geometry(&self) -> CellGeometry {
        CellGeometry::Spherical { radius: self.radius }
    }

    /// Alkali spec with a different wall quality.
    pub fn with_alkali_wall(&self, wall: WallQuality) -> Self {
        let mut out = *self;
        out.alkali.gas.wall = wall;
        out
    }

    pub fn alkali_basis(&self) -> Result<ModeBasis> {
        build_basis(&self.geometry(), &self.alkali.gas, Truncation::new(self.alkali_modes))
    }

    pub fn noble_basis(&self) -> Result<ModeBasis> {
        build_basis(&self.geometry(), &self.noble.gas, Truncation::new(self.noble_modes))
    }
}

/// Linear two-species system ready for propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeSystem {
    /// Total alkali decay rates `G_am + G_a`.
    pub alkali_decay: Vec<f64>,
    pub noble_decay: Vec<f64>,
    /// Overlaps `c_mn`, alkali rows by noble columns.
    pub coupling: DMatrix<f64>,
    pub j: f64,
    /// Initial alkali amplitudes.
    pub alpha: Vec<f64>,
}

impl ExchangeSystem {
    pub fn from_parts(alkali_decay: Vec<f64>, noble_decay: Vec<f64>, coupling: DMatrix<f64>, j: f64, alpha: Vec<f64>) -> Result<Self> {
        if coupling.nrows() != alkali_decay.len() || coupling.ncols() != noble_decay.len() || alpha.len() != alkali_decay.len() {
            return Err(invalid("inconsistent exchange system dimensions"));
        }
        if !(j.is_finite() && j >= 0.0) {
            return Err(invalid(format!("exchange rate must be >= 0, got {j}")));
        }
        Ok(Self { alkali_decay, noble_decay, coupling, j, alpha })
    }

    /// Uniform initial alkali excitation, `alpha_m = c_m0`.
    pub fn new(spec: &ExchangeSpec, j: f64) -> Result<Self> {
        spec.validate()?;
        let a = spec.alkali_basis()?;
        let b = spec.noble_basis()?;
        let c = mode_overlap(&a, &b)?.to_dmatrix();
        Self::assemble(spec, &a, &b, c, j)
    }

    fn assemble(spec: &ExchangeSpec, a: &ModeBasis, b: &ModeBasis, c: DMatrix<f64>, j: f64) -> Result<Self> {
        let alkali_decay = a.modes.iter().map(|m| m.gamma + spec.alkali.homogeneous_decay).collect();
        let noble_decay = b.modes.iter().map(|m| m.gamma + spec.noble.homogeneous_decay).collect();
        let alpha = c.column(0).iter().copied().collect();
        Self::from_parts(alkali_decay, noble_decay, c, j, alpha)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.alkali_decay.len(), self.noble_decay.len())
    }

    /// Real generator acting on `(a, q)` with `b = -i q`.
    pub fn generator(&self) -> DMatrix<f64> {
        let (m, n) = self.dims();
        let mut g = DMatrix::zeros(m + n, m + n);
        for i in 0..m {
            g[(i, i)] = -self.alkali_decay[i];
        }
        for i in 0..n {
            g[(m + i, m + i)] = -self.noble_decay[i];
        }
        for i in 0..m {
            for k in 0..n {
                let v = self.j * self.coupling[(i, k)];
                g[(i, m + k)] = -v;
                g[(m + k, i)] = v;
            }
        }
        g
    }

    fn initial_state(&self) -> DVector<f64> {
        let (m, n) = self.dims();
        let mut y = DVector::zeros(m + n);
        for i in 0..m {
            y[i] = self.alpha[i];
        }
        y
    }

    /// `J |c_00|`, the bare transfer frequency of the lowest modes.
    pub fn bare_frequency(&self) -> f64 {
        self.j * self.coupling[(0, 0)].abs()
    }
}

/// Mode amplitudes sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferTrace {
    pub times: Vec<f64>,
    pub alkali: Vec<Vec<Complex64>>,
    pub noble: Vec<Vec<Complex64>>,
}

impl TransferTrace {
    fn from_real(times: Vec<f64>, states: Vec<DVector<f64>>, m: usize) -> Self {
        let mut alkali = Vec::with_capacity(states.len());
        let mut noble = Vec::with_capacity(states.len());
        for y in states {
            alkali.push(y.iter().take(m).map(|&v| Complex64::new(v, 0.0)).collect());
            noble.push(y.iter().skip(m).map(|&v| Complex64::new(0.0, -v)).collect());
        }
        Self { times, alkali, noble }
    }

    /// Total excitation `sum |a|^2 + sum |b|^2` at each time.
    pub fn norms(&self) -> Vec<f64> {
        self.alkali
            .iter()
            .zip(&self.noble)
            .map(|(a, b)| a.iter().chain(b).map(|z| z.norm_sqr()).sum())
            .collect()
    }
}

fn check_times(tgrid: &[f64]) -> Result<()> {
    if tgrid.is_empty() || tgrid[0] < 0.0 || tgrid.windows(2).any(|w| w[1] <= w[0]) || tgrid.iter().any(|t| !t.is_finite()) {
        return Err(invalid("time grid must be non-negative, finite and strictly increasing"));
    }
    Ok(())
}

fn propagator(g: &DMatrix<f64>, dt: f64) -> Result<DMatrix<f64>> {
    let p = (g * dt).exp();
    if p.iter().all(|v| v.is_finite()) {
        Ok(p)
    } else {
        let lo = g.diagonal().iter().copied().fold(f64::INFINITY, f64::min);
        Err(Error::StiffnessFailure(format!("matrix exponential overflowed (fastest decay {:.3e} 1/s, step {dt:e} s)", -lo)))
    }
}

/// Exact propagation of the linear system to each time in `tgrid`.
pub fn transfer_amplitudes(system: &ExchangeSystem, tgrid: &[f64]) -> Result<TransferTrace> {
    check_times(tgrid)?;
    let g = system.generator();
    let mut y = system.initial_state();
    let mut t = 0.0;
    let mut states = Vec::with_capacity(tgrid.len());
    let mut cache: Option<(u64, DMatrix<f64>)> = None;
    for &target in tgrid {
        let dt = target - t;
        if dt > 0.0 {
            let reuse = matches!(&cache, Some((bits, _)) if *bits == dt.to_bits());
            if !reuse {
                cache = Some((dt.to_bits(), propagator(&g, dt)?));
            }
            y = &cache.as_ref().expect("set above").1 * y;
        }
        t = target;
        states.push(y.clone());
    }
    Ok(TransferTrace::from_real(tgrid.to_vec(), states, system.dims().0))
}

/// Same trajectory as [`transfer_amplitudes`], from the adaptive
/// Dormand-Prince integrator.
pub fn transfer_amplitudes_rk(system: &ExchangeSystem, tgrid: &[f64], opts: Dopri5Options) -> Result<TransferTrace> {
    check_times(tgrid)?;
    let g = system.generator();
    let y0 = system.initial_state();
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        let yv = DVector::from_column_slice(y);
        dy.copy_from_slice((&g * yv).as_slice());
    };
    let raw = dopri5(rhs, 0.0, y0.as_slice(), tgrid, opts)?;
    let states = raw.into_iter().map(DVector::from_vec).collect();
    Ok(TransferTrace::from_real(tgrid.to_vec(), states, system.dims().0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityResult {
    /// `max_t |T(t)|^4`.
    pub fidelity: f64,
    pub t_opt: f64,
    /// `|T(t_opt)|`, the single-excitation transfer amplitude into `b_0`.
    pub amplitude: f64,
}

const COARSE_STEPS: usize = 4000;
const FINE_STEPS: usize = 200;

/// Peak two-excitation exchange fidelity into the uniform noble-gas mode.
/// The default window is `5 pi / (J |c_00|)`.
pub fn exchange_fidelity(system: &ExchangeSystem, tmax: Option<f64>) -> Result<FidelityResult> {
    if system.j == 0.0 {
        return Ok(FidelityResult { fidelity: 0.0, t_opt: 0.0, amplitude: 0.0 });
    }
    let tmax = match tmax {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(invalid(format!("tmax must be > 0, got {t}"))),
        None => 5.0 * PI / system.bare_frequency(),
    };
    let m = system.dims().0;
    let g = system.generator();
    let dt = tmax / COARSE_STEPS as f64;
    let step = propagator(&g, dt)?;
    let mut y = system.initial_state();
    let mut best = (0.0f64, 0usize);
    let mut best_prev = y.clone();
    for i in 1..=COARSE_STEPS {
        let next = &step * &y;
        let prev = std::mem::replace(&mut y, next);
        let v = y[m].abs();
        // later peaks must win clearly, so ties resolve to the earliest
        if v > best.0 * (1.0 + 1e-12) {
            best = (v, i);
            best_prev = prev;
        }
    }
    if best.1 == 0 {
        return Ok(FidelityResult { fidelity: 0.0, t_opt: 0.0, amplitude: 0.0 });
    }
    // refine on [t_{i-1}, t_{i+1}]
    let fine_dt = dt / (FINE_STEPS / 2) as f64;
    let fine = propagator(&g, fine_dt)?;
    let start_t = (best.1 - 1) as f64 * dt;
    let mut z = best_prev;
    let mut samples = Vec::with_capacity(FINE_STEPS + 1);
    samples.push(z[m].abs());
    for _ in 0..FINE_STEPS {
        z = &fine * z;
        samples.push(z[m].abs());
    }
    let (k, &vk) = samples.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let (mut t_opt, mut amp) = (start_t + k as f64 * fine_dt, vk);
    if k > 0 && k < FINE_STEPS {
        let (a, b, c) = (samples[k - 1], vk, samples[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            let shift = 0.5 * (a - c) / denom;
            t_opt += shift * fine_dt;
            amp = b - 0.25 * (a - c) * shift;
        }
    }
    Ok(FidelityResult { fidelity: amp.powi(4), t_opt, amplitude: amp })
}

/// Fidelity over a grid of coupling rates and wall qualities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityMap {
    pub j_values: Vec<f64>,
    pub n_values: Vec<f64>,
    /// `fidelity[i][k]` at `j_values[i]`, `n_values[k]`.
    pub fidelity: Vec<Vec<f64>>,
    pub t_opt: Vec<Vec<f64>>,
    /// Decreases of F along increasing J larger than `1e-6`, as `(i, k, drop)`.
    pub j_violations: Vec<(usize, usize, f64)>,
    /// Same along increasing N (when the N grid is ascending).
    pub n_violations: Vec<(usize, usize, f64)>,
}

pub const MONOTONE_TOL: f64 = 1e-6;

pub fn fidelity_map(spec: &ExchangeSpec, j_grid: &[f64], n_grid: &[f64]) -> Result<FidelityMap> {
    spec.validate()?;
    if j_grid.iter().chain(n_grid).any(|v| !(*v > 0.0)) {
        return Err(invalid("J and N grids must be positive"));
    }
    let noble = spec.noble_basis()?;
    let mut cache = OverlapCache::new();
    let mut columns = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let s = spec.with_alkali_wall(WallQuality::from_collisions(n)?);
        let alkali = s.alkali_basis()?;
        let c = cache.get_or_compute(&alkali, &noble)?.to_dmatrix();
        let base = ExchangeSystem::assemble(&s, &alkali, &noble, c, 0.0)?;
        let col: Vec<FidelityResult> = j_grid
            .par_iter()
            .map(|&j| {
                let mut sys = base.clone();
                sys.j = j;
                exchange_fidelity(&sys, None)
            })
            .collect::<Result<_>>()?;
        columns.push(col);
    }
    let fidelity: Vec<Vec<f64>> = (0..j_grid.len()).map(|i| columns.iter().map(|c| c[i].fidelity).collect()).collect();
    let t_opt = (0..j_grid.len()).map(|i| columns.iter().map(|c| c[i].t_opt).collect()).collect();
    let mut j_violations = Vec::new();
    for i in 1..j_grid.len() {
        for k in 0..n_grid.len() {
            let drop = fidelity[i - 1][k] - fidelity[i][k];
            if drop > MONOTONE_TOL {
                j_violations.push((i, k, drop));
            }
        }
    }
    let mut n_violations = Vec::new();
    for i in 0..j_grid.len() {
        for k in 1..n_grid.len() {
            let drop = fidelity[i][k - 1] - fidelity[i][k];
            if n_grid[k] > n_grid[k - 1] && drop > MONOTONE_TOL {
                n_violations.push((i, k, drop));
            }
        }
    }
    Ok(FidelityMap { j_values: j_grid.to_vec(), n_values: n_grid.to_vec(), fidelity, t_opt, j_violations, n_violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(j: f64) -> ExchangeSystem {
        ExchangeSystem::from_parts(vec![0.0], vec![0.0], DMatrix::from_element(1, 1, 1.0), j, vec![1.0]).unwrap()
    }

    #[test]
    fn single_mode_rabi_transfer() {
        let sys = toy(2.0);
        let ts: Vec<f64> = (1..50).map(|i| i as f64 * 0.03).collect();
        let tr = transfer_amplitudes(&sys, &ts).unwrap();
        for (t, b) in ts.iter().zip(&tr.noble) {
            assert!((b[0].norm_sqr() - (2.0 * t).sin().powi(2)).abs() < 1e-12);
        }
        let f = exchange_fidelity(&sys, None).unwrap();
        assert!((f.fidelity - 1.0).abs() < 1e-9);
        assert!((2.0 * f.t_opt - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn zero_coupling_decays_independently() {
        let c = DMatrix::from_row_slice(2, 1, &[0.9, 0.3]);
        let sys = ExchangeSystem::from_parts(vec![1.0, 5.0], vec![0.0], c, 0.0, vec![0.9, 0.3]).unwrap();
        let tr = transfer_amplitudes(&sys, &[0.4]).unwrap();
        assert!((tr.alkali[0][0].re - 0.9 * (-0.4f64).exp()).abs() < 1e-14);
        assert!((tr.alkali[0][1].re - 0.3 * (-2.0f64).exp()).abs() < 1e-14);
        assert_eq!(tr.noble[0][0].norm(), 0.0);
        assert_eq!(exchange_fidelity(&sys, None).unwrap().fidelity, 0.0);
    }

    #[test]
    fn generator_is_antisymmetric_without_decay() {
        let c = DMatrix::from_row_slice(2, 2, &[0.8, 0.1, -0.2, 0.5]);
        let sys = ExchangeSystem::from_parts(vec![0.0; 2], vec![0.0; 2], c, 3.0, vec![0.8, -0.2]).unwrap();
        let g = sys.generator();
        assert!((&g + g.transpose()).amax() < 1e-15);
    }

    #[test]
    fn rk_matches_exponential() {
        let c = DMatrix::from_row_slice(2, 2, &[0.8, 0.1, -0.2, 0.5]);
        let sys = ExchangeSystem::from_parts(vec![1.0, 20.0], vec![0.0, 4.0], c, 3.0, vec![0.8, -0.2]).unwrap();
        let ts = [0.1, 0.5, 1.0];
        let a = transfer_amplitudes(&sys, &ts).unwrap();
        let b = transfer_amplitudes_rk(&sys, &ts, Dopri5Options::default()).unwrap();
        for (x, y) in a.noble.iter().flatten().zip(b.noble.iter().flatten()) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn noble_wall_must_preserve() {
        let mut spec = ExchangeSpec {
            radius: 0.5,
            alkali: SpeciesSpec::alkali(0.35, 5e-6, WallQuality::Finite(10.0), 6.0).unwrap(),
            noble: SpeciesSpec::noble_gas(0.7, 2e-6).unwrap(),
            alkali_modes: 3,
            noble_modes: 3,
        };
        assert!(spec.validate().is_ok());
        spec.noble.gas.wall = WallQuality::Finite(1e3);
        assert!(ExchangeSystem::new(&spec, 1.0).is_err());
    }
}
