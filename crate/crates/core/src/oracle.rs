//! Brownian-particle Monte-Carlo simulation of spins diffusing in a cell,
//! used to cross-check mode decay rates and spin-noise spectra.
//!
//! Each particle draws from its own ChaCha8 stream (seed, stream = particle
//! index), so results do not depend on the thread count. Reductions over
//! particles run in fixed-size chunks summed in index order.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dynamics::{full_width_half_max, FieldSpec, SpectrumResult};
use crate::error::{invalid, Error, Result};
use crate::modes::{eval_mode, CellGeometry, DiffusionMode, WallGasSpec, WallQuality};
use crate::overlaps::ProbeProfile;

/// Minimum number of averaged periodogram segments.
pub const MIN_SEGMENTS: usize = 32;
/// Reflections attempted per step before clamping to the wall.
pub const MAX_REFLECTIONS: usize = 10;
/// Minimum coefficient of determination of a decay fit.
pub const MIN_R_SQUARED: f64 = 0.99;

const CHUNK: usize = 16;

/// What happens to a spin that depolarizes at the wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallRule {
    /// The phasor is zeroed and stays zero.
    Destroy,
    /// The phasor restarts with a fresh uniformly random phase.
    Rethermalize,
}

/// Monte-Carlo run parameters. Times in s, lengths in cm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub geometry: CellGeometry,
    pub gas: WallGasSpec,
    pub field: FieldSpec,
    pub probe: Option<ProbeProfile>,
    pub dt: f64,
    pub n_particles: usize,
    /// Recorded time after burn-in.
    pub total_time: f64,
    pub burn_in: f64,
    /// Record every this many steps.
    pub sample_every: usize,
    /// Particles summed into one signal before its periodogram is taken.
    pub group_size: usize,
    /// Periodogram segment length in samples.
    pub segment_len: usize,
    pub wall_rule: WallRule,
    pub seed: u64,
}

impl SimConfig {
    /// Defaults for everything but the physics.
    pub fn new(geometry: CellGeometry, gas: WallGasSpec, field: FieldSpec, dt: f64) -> Self {
        Self {
            geometry,
            gas,
            field,
            probe: None,
            dt,
            n_particles: 1000,
            total_time: 1.0,
            burn_in: 0.0,
            sample_every: 1,
            group_size: 1,
            segment_len: 1024,
            wall_rule: WallRule::Destroy,
            seed: 0,
        }
    }

    /// `min(w0, R/10)`, with `R` half the smallest cell dimension.
    pub fn characteristic_length(&self) -> f64 {
        let r = 0.5 * self.geometry.min_dimension();
        let w = self.probe.map_or(f64::INFINITY, |p| p.waist);
        w.min(r / 10.0)
    }

    pub fn step_length(&self) -> f64 {
        (2.0 * self.gas.diffusion * self.dt).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.gas.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("time step must be > 0, got {}", self.dt)));
        }
        let limit = self.characteristic_length() / 10.0;
        if self.step_length() >= limit {
            return Err(invalid(format!(
                "step length {:.3e} cm must stay below {limit:.3e} cm; reduce dt",
                self.step_length()
            )));
        }
        if self.n_particles == 0 || self.sample_every == 0 || self.group_size == 0 {
            return Err(invalid("particle count, sampling stride and group size must be positive"));
        }
        if !(self.total_time > 0.0 && self.burn_in >= 0.0) {
            return Err(invalid("total time must be > 0 and burn-in >= 0"));
        }
        Ok(())
    }

    fn recorded_samples(&self) -> usize {
        (self.total_time / (self.dt * self.sample_every as f64)).round() as usize + 1
    }

    fn burn_in_steps(&self) -> usize {
        (self.burn_in / self.dt).ceil() as usize
    }
}

/// Time step at which one Bernoulli trial per wall crossing reproduces the
/// Robin length of `gas` in `geometry`, `4 c^2 lambda^2 / (pi D)` with `c`
/// the Robin factor of the cell.
pub fn matched_dt(gas: &WallGasSpec, geometry: &CellGeometry) -> f64 {
    let c = geometry.robin_factor();
    4.0 * c * c * gas.mean_free_path * gas.mean_free_path / (PI * gas.diffusion)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: [f64; 3],
    pub phasor: Complex64,
}

impl Particle {
    pub fn alive(&self) -> bool {
        self.phasor != Complex64::new(0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub crossings: u64,
    pub depolarizations: u64,
    /// Steps that still ended outside after [`MAX_REFLECTIONS`] reflections.
    pub clamped: u64,
}

impl Diagnostics {
    fn merge(mut self, o: Self) -> Self {
        self.crossings += o.crossings;
        self.depolarizations += o.depolarizations;
        self.clamped += o.clamped;
        self
    }
}

/// Per-step constants shared by all particles.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    geometry: Option<CellGeometry>,
    sigma: f64,
    loss: f64,
    rotation: Complex64,
    rule: WallRule,
}

impl Kernel {
    fn new(geometry: Option<CellGeometry>, diffusion: f64, wall: WallQuality, omega0: f64, dt: f64, rule: WallRule) -> Self {
        Self {
            geometry,
            sigma: (2.0 * diffusion * dt).sqrt(),
            loss: wall.loss_probability(),
            rotation: Complex64::from_polar(1.0, -omega0 * dt),
            rule,
        }
    }

    fn advance(&self, p: &mut Particle, rng: &mut ChaCha8Rng, diag: &mut Diagnostics) {
        let one_d = matches!(self.geometry, Some(CellGeometry::Slab1d { .. }));
        let mut d = [0.0; 3];
        d[0] = self.sigma * rng.sample::<f64, _>(StandardNormal);
        if !one_d {
            d[1] = self.sigma * rng.sample::<f64, _>(StandardNormal);
            d[2] = self.sigma * rng.sample::<f64, _>(StandardNormal);
        }
        let crossings = match self.geometry {
            None => {
                for i in 0..3 {
                    p.position[i] += d[i];
                }
                0
            }
            Some(g) => move_with_reflection(&g, &mut p.position, d, diag),
        };
        diag.crossings += crossings as u64;
        for _ in 0..crossings {
            if !p.alive() && self.rule == WallRule::Destroy {
                break;
            }
            if self.loss > 0.0 && (self.loss >= 1.0 || rng.random::<f64>() < self.loss) {
                diag.depolarizations += 1;
                p.phasor = match self.rule {
                    WallRule::Destroy => Complex64::new(0.0, 0.0),
                    WallRule::Rethermalize => Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()),
                };
            }
        }
        p.phasor *= self.rotation;
    }
}

fn reflect_interval(x: &mut f64, half: f64) -> usize {
    let mut n = 0;
    while x.abs() > half && n < MAX_REFLECTIONS {
        *x = if *x > half { 2.0 * half - *x } else { -2.0 * half - *x };
        n += 1;
    }
    n
}

/// Moves `from` by `d` inside a ball of the given radius (in the first
/// `dims` coordinates), reflecting the path specularly at the sphere.
fn reflect_ball(pos: &mut [f64; 3], d: [f64; 3], radius: f64, dims: usize) -> (usize, bool) {
    let dot = |a: &[f64; 3], b: &[f64; 3]| (0..dims).map(|i| a[i] * b[i]).sum::<f64>();
    let mut start = *pos;
    let mut step = d;
    let r2 = radius * radius;
    for n in 0..=MAX_REFLECTIONS {
        let mut end = start;
        for i in 0..dims {
            end[i] += step[i];
        }
        if dot(&end, &end) <= r2 {
            pos[..dims].copy_from_slice(&end[..dims]);
            return (n, true);
        }
        if n == MAX_REFLECTIONS {
            break;
        }
        // |start + t step| = R for t in (0, 1]
        let a = dot(&step, &step);
        let b = 2.0 * dot(&start, &step);
        let c = (dot(&start, &start) - r2).min(0.0);
        let t = ((-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a)).clamp(0.0, 1.0);
        let mut hit = start;
        for i in 0..dims {
            hit[i] += t * step[i];
        }
        let norm = dot(&hit, &hit).sqrt();
        let mut rest = [0.0; 3];
        for i in 0..dims {
            rest[i] = (1.0 - t) * step[i];
        }
        let along = dot(&rest, &hit) / norm;
        for i in 0..dims {
            rest[i] -= 2.0 * along * hit[i] / norm;
            hit[i] *= radius / norm;
        }
        start = hit;
        step = rest;
    }
    // still outside: clamp onto the wall
    let norm = dot(&start, &start).sqrt().max(f64::MIN_POSITIVE);
    for i in 0..dims {
        pos[i] = start[i] * (radius / norm).min(1.0);
    }
    (MAX_REFLECTIONS, false)
}

/// Reflects `x` into `[-half, half]`; returns the crossing count and whether
/// it had to be clamped.
fn reflect_axis(x: &mut f64, half: f64) -> (usize, bool) {
    let n = reflect_interval(x, half);
    if x.abs() > half {
        *x = x.clamp(-half, half);
        return (n, false);
    }
    (n, true)
}

fn move_with_reflection(g: &CellGeometry, pos: &mut [f64; 3], d: [f64; 3], diag: &mut Diagnostics) -> usize {
    let mut results = [(0, true); 3];
    match *g {
        CellGeometry::Slab1d { length } => {
            pos[0] += d[0];
            results[0] = reflect_axis(&mut pos[0], 0.5 * length);
        }
        CellGeometry::Rectangular { lx, ly, lz } => {
            for (i, len) in [lx, ly, lz].into_iter().enumerate() {
                pos[i] += d[i];
                results[i] = reflect_axis(&mut pos[i], 0.5 * len);
            }
        }
        CellGeometry::Cylindrical { radius, length } => {
            pos[2] += d[2];
            results[0] = reflect_axis(&mut pos[2], 0.5 * length);
            results[1] = reflect_ball(pos, [d[0], d[1], 0.0], radius, 2);
        }
        CellGeometry::Spherical { radius } => {
            results[0] = reflect_ball(pos, d, radius, 3);
        }
    }
    let clamped = results.iter().filter(|r| !r.1).count() as u64;
    if clamped > 0 {
        log::debug!("{clamped} steps clamped after {MAX_REFLECTIONS} reflections");
    }
    diag.clamped += clamped;
    results.iter().map(|r| r.0).sum()
}

/// Uniformly distributed point in the cell.
pub fn sample_uniform<R: Rng>(g: &CellGeometry, rng: &mut R) -> [f64; 3] {
    let mut u = |half: f64| half * (2.0 * rng.random::<f64>() - 1.0);
    match *g {
        CellGeometry::Slab1d { length } => [u(0.5 * length), 0.0, 0.0],
        CellGeometry::Rectangular { lx, ly, lz } => [u(0.5 * lx), u(0.5 * ly), u(0.5 * lz)],
        CellGeometry::Cylindrical { radius, length } => {
            let z = u(0.5 * length);
            let rho = radius * rng.random::<f64>().sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            [rho * phi.cos(), rho * phi.sin(), z]
        }
        CellGeometry::Spherical { radius } => loop {
            let p = [
                radius * (2.0 * rng.random::<f64>() - 1.0),
                radius * (2.0 * rng.random::<f64>() - 1.0),
                radius * (2.0 * rng.random::<f64>() - 1.0),
            ];
            if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= radius * radius {
                break p;
            }
        },
    }
}

fn particle_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// A set of particles advanced together, one RNG stream each.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub particles: Vec<Particle>,
    rngs: Vec<ChaCha8Rng>,
    kernel_geometry: Option<CellGeometry>,
    diffusion: f64,
    wall: WallQuality,
    omega0: f64,
    rule: WallRule,
    pub diagnostics: Diagnostics,
}

impl Ensemble {
    /// Particles placed uniformly in the cell with unit phasors of random phase.
    pub fn uniform(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let mut rngs: Vec<ChaCha8Rng> = (0..config.n_particles).map(|i| particle_rng(config.seed, i)).collect();
        let particles = rngs
            .iter_mut()
            .map(|rng| {
                let position = sample_uniform(&config.geometry, rng);
                Particle { position, phasor: Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()) }
            })
            .collect();
        Ok(Self {
            particles,
            rngs,
            kernel_geometry: Some(config.geometry),
            diffusion: config.gas.diffusion,
            wall: config.gas.wall,
            omega0: config.field.omega0(),
            rule: config.wall_rule,
            diagnostics: Diagnostics::default(),
        })
    }

    /// Particles at the origin of unbounded space with unit phasors.
    pub fn unbounded(n: usize, diffusion: f64, omega0: f64, seed: u64) -> Result<Self> {
        if !(diffusion >= 0.0 && diffusion.is_finite()) {
            return Err(invalid(format!("diffusion coefficient must be >= 0, got {diffusion}")));
        }
        Ok(Self {
            particles: vec![Particle { position: [0.0; 3], phasor: Complex64::new(1.0, 0.0) }; n],
            rngs: (0..n).map(|i| particle_rng(seed, i)).collect(),
            kernel_geometry: None,
            diffusion,
            wall: WallQuality::Preserving,
            omega0,
            rule: WallRule::Destroy,
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn step(&mut self, dt: f64) {
        let kernel = Kernel::new(self.kernel_geometry, self.diffusion, self.wall, self.omega0, dt, self.rule);
        let diag = self
            .particles
            .par_chunks_mut(CHUNK)
            .zip(self.rngs.par_chunks_mut(CHUNK))
            .map(|(ps, rs)| {
                let mut d = Diagnostics::default();
                for (p, r) in ps.iter_mut().zip(rs.iter_mut()) {
                    kernel.advance(p, r, &mut d);
                }
                d
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Diagnostics::default(), Diagnostics::merge);
        self.diagnostics = self.diagnostics.merge(diag);
    }

    /// Sum of `|phasor|^2`.
    pub fn total_power(&self) -> f64 {
        self.particles.iter().map(|p| p.phasor.norm_sqr()).sum()
    }

    /// Mean of `|r|^2` over particles.
    pub fn mean_square_displacement(&self) -> f64 {
        self.particles.iter().map(|p| p.position.iter().map(|x| x * x).sum::<f64>()).sum::<f64>() / self.len() as f64
    }
}

/// Sums per-item vectors in fixed chunks, then chunk totals in order, so the
/// floating-point result is independent of scheduling.
fn ordered_sum<T, F>(n: usize, len: usize, f: F) -> (Vec<T>, Diagnostics)
where
    T: Copy + Default + Send + std::ops::AddAssign,
    F: Fn(usize, &mut [T], &mut Diagnostics) + Sync,
{
    let parts: Vec<(Vec<T>, Diagnostics)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![T::default(); len];
            let mut diag = Diagnostics::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                f(i, &mut acc, &mut diag);
            }
            (acc, diag)
        })
        .collect();
    let mut total = vec![T::default(); len];
    let mut diag = Diagnostics::default();
    for (part, d) in parts {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
        diag = diag.merge(d);
    }
    (total, diag)
}

/// Result of a log-linear decay fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub gamma: f64,
    pub r_squared: f64,
    /// Fitted window `[t_start, t_end]`.
    pub window: (f64, f64),
    pub times: Vec<f64>,
    /// Demodulated projection normalized to its value at `t = 0`.
    pub projection: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Least-squares fit of `ln y = c - gamma t`; returns `(gamma, r_squared)`.
fn log_linear_fit(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mt = t.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|x| (x - mt).powi(2)).sum();
    let sxy: f64 = t.iter().zip(&ly).map(|(x, v)| (x - mt) * (v - my)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = ly.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = t.iter().zip(&ly).map(|(x, v)| (v - my - slope * (x - mt)).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (-slope, r2)
}

/// Starts particles uniformly with phasors `u_n(r)`, tracks the projection
/// `sum_i phasor_i conj(u_n(r_i))` and fits its exponential decay.
///
/// The fit window runs from `t = 0` until the projection first falls below
/// five times its statistical noise or 2% of its initial value. Fits whose
/// decay over the window is below 5% are accepted without the R^2 check,
/// since a flat trace has no variance to explain.
pub fn mode_decay_check(config: &SimConfig, mode: &DiffusionMode) -> Result<DecayFit> {
    config.validate()?;
    let g = config.geometry;
    let samples = config.recorded_samples();
    let kernel = Kernel::new(Some(g), config.gas.diffusion, config.gas.wall, config.field.omega0(), config.dt, WallRule::Destroy);
    let stride = config.sample_every;
    // accumulate the projection and the squared initial amplitudes
    let (sums, diag) = ordered_sum::<Complex64, _>(config.n_particles, samples + 1, |i, acc, diag| {
        let mut rng = particle_rng(config.seed, i);
        let position = sample_uniform(&g, &mut rng);
        let u0 = eval_mode(mode, &g, position).unwrap_or_default();
        let mut p = Particle { position, phasor: u0 };
        acc[samples] += Complex64::new(u0.norm_sqr() * u0.norm_sqr(), 0.0);
        for (j, slot) in acc.iter_mut().take(samples).enumerate() {
            if j > 0 {
                for _ in 0..stride {
                    kernel.advance(&mut p, &mut rng, diag);
                }
            }
            if p.alive() {
                *slot += p.phasor * eval_mode(mode, &g, p.position).unwrap_or_default().conj();
            }
        }
    });
    let dt_s = config.dt * stride as f64;
    let omega0 = config.field.omega0();
    let p0 = sums[0].re;
    if !(p0 > 0.0) {
        return Err(Error::FitFailure { r_squared: f64::NAN });
    }
    let noise = sums[samples].re.sqrt() / p0;
    let times: Vec<f64> = (0..samples).map(|j| j as f64 * dt_s).collect();
    let projection: Vec<f64> =
        (0..samples).map(|j| (sums[j] * Complex64::from_polar(1.0, omega0 * times[j])).re / p0).collect();
    let floor = (5.0 * noise).max(0.02);
    let end = projection.iter().position(|&v| v < floor).unwrap_or(samples);
    if end < 3 {
        return Err(Error::FitFailure { r_squared: f64::NAN });
    }
    let (gamma, r_squared) = log_linear_fit(&times[..end], &projection[..end]);
    let window = (times[0], times[end - 1]);
    let flat = (gamma * (window.1 - window.0)).abs() < 0.05;
    if !flat && !(r_squared >= MIN_R_SQUARED) {
        return Err(Error::FitFailure { r_squared });
    }
    Ok(DecayFit { gamma, r_squared, window, times, projection, diagnostics: diag })
}

/// Spin-noise periodogram from the simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectrum {
    pub spectrum: SpectrumResult,
    pub segments: usize,
    pub sample_interval: f64,
    pub diagnostics: Diagnostics,
}

fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|j| 0.5 * (1.0 - (2.0 * PI * j as f64 / n as f64).cos())).collect()
}

/// Welch estimate with 50% overlapping Hann segments, accumulated into `acc`
/// in FFT bin order. Returns the number of segments.
fn welch_accumulate(signal: &[Complex64], fft: &Arc<dyn Fft<f64>>, window: &[f64], dt: f64, acc: &mut [f64]) -> usize {
    let n = window.len();
    let norm = dt / window.iter().map(|w| w * w).sum::<f64>();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut segments = 0;
    let mut start = 0;
    while start + n <= signal.len() {
        for j in 0..n {
            // conjugate so that a phasor turning as exp(-i w0 t) peaks at +f0
            buf[j] = signal[start + j].conj() * window[j];
        }
        fft.process(&mut buf);
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v.norm_sqr() * norm;
        }
        segments += 1;
        start += n / 2;
    }
    segments
}

/// Spectrum of `s(t) = sum_i I(r_i) phasor_i` for an unpolarized ensemble
/// (uniform random phases, depolarized spins rethermalized with a new phase).
/// Particles are summed in groups of `group_size`; the periodograms of all
/// groups and segments are averaged.
pub fn empirical_spectrum(config: &SimConfig) -> Result<EmpiricalSpectrum> {
    config.validate()?;
    let probe = config.probe.ok_or_else(|| invalid("the spectrum needs a probe profile"))?;
    let g = config.geometry;
    let i0 = probe.peak_intensity(&g)?;
    let samples = config.recorded_samples();
    let n = config.segment_len;
    if n < 8 {
        return Err(invalid("segment length must be at least 8 samples"));
    }
    let groups = config.n_particles.div_ceil(config.group_size);
    let per_group = if samples >= n { (samples - n) / (n / 2) + 1 } else { 0 };
    let segments = groups * per_group;
    if segments < MIN_SEGMENTS {
        return Err(Error::InsufficientSamples { segments, required: MIN_SEGMENTS });
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let window = hann(n);
    let dt_s = config.dt * config.sample_every as f64;
    let kernel = Kernel::new(Some(g), config.gas.diffusion, config.gas.wall, config.field.omega0(), config.dt, WallRule::Rethermalize);
    let burn = config.burn_in_steps();
    let stride = config.sample_every;
    let (acc, diag) = ordered_sum::<f64, _>(groups, n, |grp, acc, diag| {
        let mut signal = vec![Complex64::new(0.0, 0.0); samples];
        let first = grp * config.group_size;
        for i in first..(first + config.group_size).min(config.n_particles) {
            let mut rng = particle_rng(config.seed, i);
            let position = sample_uniform(&g, &mut rng);
            let mut p = Particle { position, phasor: Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()) };
            for _ in 0..burn {
                kernel.advance(&mut p, &mut rng, diag);
            }
            for (j, s) in signal.iter_mut().enumerate() {
                if j > 0 {
                    for _ in 0..stride {
                        kernel.advance(&mut p, &mut rng, diag);
                    }
                }
                *s += p.phasor * probe.intensity_with_peak(&g, i0, p.position);
            }
        }
        welch_accumulate(&signal, &fft, &window, dt_s, acc);
    });
    // reorder FFT bins to ascending frequency
    let half = n / 2;
    let mut frequencies = Vec::with_capacity(n);
    let mut sxx = Vec::with_capacity(n);
    for k in (half..n).chain(0..half) {
        let kk = if k >= half { k as f64 - n as f64 } else { k as f64 };
        frequencies.push(kk / (n as f64 * dt_s));
        sxx.push(acc[k] / segments as f64);
    }
    let spectrum = SpectrumResult {
        frequencies,
        sxx,
        reference: None,
        reference_gamma: None,
        f0: config.field.larmor_hz,
        p_tilde: 1.0,
        weights: Vec::new(),
        gammas: Vec::new(),
        singular_power: 0.0,
    };
    Ok(EmpiricalSpectrum { spectrum, segments, sample_interval: dt_s, diagnostics: diag })
}

/// Peak-normalized comparison of a sampled spectrum with an analytic one over
/// the analytic full width at half maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeComparison {
    pub frequencies: Vec<f64>,
    pub ratio: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// `smoothing` is the half-width (in bins) of the moving average applied to
/// both curves before normalization.
pub fn shape_ratio(empirical: &SpectrumResult, analytic: &SpectrumResult, smoothing: usize) -> Result<ShapeComparison> {
    if !analytic.is_analytic() {
        return Err(invalid("reference spectrum must be analytic"));
    }
    let hw = 0.5 * full_width_half_max(analytic)?;
    let f = &empirical.frequencies;
    let model: Vec<f64> = f.iter().map(|&x| analytic.evaluate(x)).collect();
    let smooth = |y: &[f64], i: usize| {
        let lo = i.saturating_sub(smoothing);
        let hi = (i + smoothing).min(y.len() - 1);
        y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
    };
    let band: Vec<usize> = (0..f.len()).filter(|&i| (f[i] - analytic.f0).abs() <= hw).collect();
    if band.len() < 3 {
        return Err(Error::InsufficientSamples { segments: band.len(), required: 3 });
    }
    let emp: Vec<f64> = band.iter().map(|&i| smooth(&empirical.sxx, i)).collect();
    let mdl: Vec<f64> = band.iter().map(|&i| smooth(&model, i)).collect();
    let emax = emp.iter().copied().fold(f64::MIN, f64::max);
    let mmax = mdl.iter().copied().fold(f64::MIN, f64::max);
    let ratio: Vec<f64> = emp.iter().zip(&mdl).map(|(e, m)| (e / emax) / (m / mmax)).collect();
    Ok(ShapeComparison {
        frequencies: band.iter().map(|&i| f[i]).collect(),
        min_ratio: ratio.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ratio,
    })
}

/// Free-space mean-square displacement against `6 D t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsdCheck {
    pub time: f64,
    pub msd: f64,
    pub expected: f64,
    /// Standard error of the sample mean.
    pub sigma: f64,
}

impl MsdCheck {
    pub fn z_score(&self) -> f64 {
        (self.msd - self.expected) / self.sigma
    }
}

pub fn msd_check(diffusion: f64, dt: f64, steps: usize, n_particles: usize, seed: u64) -> Result<MsdCheck> {
    if n_particles < 2 || steps == 0 {
        return Err(invalid("need at least two particles and one step"));
    }
    let mut ens = Ensemble::unbounded(n_particles, diffusion, 0.0, seed)?;
    for _ in 0..steps {
        ens.step(dt);
    }
    let t = dt * steps as f64;
    let s2 = 2.0 * diffusion * t;
    Ok(MsdCheck {
        time: t,
        msd: ens.mean_square_displacement(),
        expected: 3.0 * s2,
        // |r|^2 / s2 is chi-square with 3 degrees of freedom
        sigma: (6.0f64).sqrt() * s2 / (n_particles as f64).sqrt(),
    })
}
