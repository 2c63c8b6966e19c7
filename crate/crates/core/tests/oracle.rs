use std::f64::consts::PI;

use spinmodes::dynamics::{spin_noise_spectrum, FieldSpec, SpinStatistics};
use spinmodes::modes::{build_basis, Axis, CellGeometry, Truncation, WallGasSpec, WallQuality};
use spinmodes::oracle::{empirical_spectrum, matched_dt, mode_decay_check, msd_check, shape_ratio, Ensemble, SimConfig, WallRule};
use spinmodes::overlaps::ProbeProfile;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn slab_decay_config(wall: WallQuality, particles: usize) -> (SimConfig, spinmodes::modes::ModeBasis) {
    let slab = CellGeometry::slab(1.0).unwrap();
    let gas = WallGasSpec::new(1.0, 1e-3, wall).unwrap();
    let basis = build_basis(&slab, &gas, Truncation::new(2)).unwrap();
    let mut cfg = SimConfig::new(slab, gas, FieldSpec::new(0.0).unwrap(), 1e-5);
    cfg.n_particles = particles;
    cfg.total_time = 0.2;
    cfg.sample_every = 100;
    cfg.seed = 3;
    (cfg, basis)
}

#[test]
fn dirichlet_slab_decay_rate() {
    let (cfg, basis) = slab_decay_config(WallQuality::Depolarizing, 20_000);
    let fit = mode_decay_check(&cfg, &basis.modes[0]).unwrap();
    assert!((fit.gamma / (PI * PI) - 1.0).abs() < 0.05, "{}", fit.gamma);
    assert!(fit.r_squared >= 0.99);
    assert!(fit.diagnostics.depolarizations > 0);
}

#[test]
fn robin_slab_decay_lies_between_limits() {
    // per-crossing loss reproduces the Robin condition only at the matched step
    let (mut cfg, basis) = slab_decay_config(WallQuality::Finite(100.0), 10_000);
    cfg.dt = matched_dt(&cfg.gas, &cfg.geometry);
    let fit = mode_decay_check(&cfg, &basis.modes[0]).unwrap();
    let expected = basis.modes[0].gamma;
    assert!(expected > 0.5 && expected < 0.9 * PI * PI);
    assert!(fit.gamma > 0.0 && fit.gamma < PI * PI);
    assert!((fit.gamma / expected - 1.0).abs() < 0.1, "{} vs {expected}", fit.gamma);
}

#[test]
fn free_diffusion_spreads_as_six_d_t() {
    let m = msd_check(0.7, 1e-3, 50, 100_000, 5).unwrap();
    assert!(m.z_score().abs() < 3.0, "z = {}", m.z_score());
    assert!((m.expected - 6.0 * 0.7 * 0.05).abs() < 1e-15);
}

/// Chi-square p-value of counts against equal expected occupancy.
fn uniform_p_value(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(chi2)
}

fn walked_ensemble(geometry: CellGeometry, n: usize, steps: usize, coarse_dt: f64) -> Ensemble {
    let gas = WallGasSpec::new(1.0, 1e-3, WallQuality::Preserving).unwrap();
    let mut cfg = SimConfig::new(geometry, gas, FieldSpec::new(0.0).unwrap(), 1e-6);
    cfg.n_particles = n;
    cfg.seed = 17;
    let mut ens = Ensemble::uniform(&cfg).unwrap();
    for _ in 0..steps {
        ens.step(coarse_dt);
    }
    ens
}

#[test]
fn reflecting_walk_keeps_ball_uniform() {
    let sphere = CellGeometry::sphere(1.0).unwrap();
    let ens = walked_ensemble(sphere, 1_000_000, 40, 2e-3);
    assert_eq!(ens.len(), 1_000_000);
    assert!(ens.particles.iter().all(|p| sphere.contains(p.position)));
    // equal-volume shells
    let bins = 20;
    let mut counts = vec![0u64; bins];
    for p in &ens.particles {
        let r3 = p.position.iter().map(|x| x * x).sum::<f64>().powf(1.5);
        counts[((r3 * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let p = uniform_p_value(&counts);
    assert!(p > 0.01, "p = {p}, {counts:?}");
    assert!((ens.total_power() / 1e6 - 1.0).abs() < 1e-12);
}

#[test]
fn reflecting_walk_keeps_cylinder_uniform() {
    let cyl = CellGeometry::cylinder(1.0, 3.0).unwrap();
    let ens = walked_ensemble(cyl, 1_000_000, 40, 2e-3);
    assert!(ens.particles.iter().all(|p| cyl.contains(p.position)));
    let (nr, nz) = (8, 6);
    let mut counts = vec![0u64; nr * nz];
    for p in &ens.particles {
        let [x, y, z] = p.position;
        let ir = (((x * x + y * y) * nr as f64) as usize).min(nr - 1);
        let iz = (((z / 3.0 + 0.5) * nz as f64) as usize).min(nz - 1);
        counts[ir * nz + iz] += 1;
    }
    let p = uniform_p_value(&counts);
    assert!(p > 0.01, "p = {p}");
    assert_eq!(ens.diagnostics.depolarizations, 0);
}

fn slab_spectrum_config(f0: f64, seed: u64) -> SimConfig {
    let slab = CellGeometry::slab(1.0).unwrap();
    let gas = WallGasSpec::new(1.0, 1e-3, WallQuality::Depolarizing).unwrap();
    let mut cfg = SimConfig::new(slab, gas, FieldSpec::new(f0).unwrap(), 1.2e-5);
    cfg.probe = Some(ProbeProfile::gaussian(0.3, Axis::Z).unwrap());
    cfg.n_particles = 512;
    cfg.group_size = 64;
    cfg.burn_in = 0.5;
    cfg.total_time = 30.0;
    cfg.sample_every = 16;
    cfg.segment_len = 1 << 13;
    cfg.wall_rule = WallRule::Rethermalize;
    cfg.seed = seed;
    cfg
}

#[test]
fn slab_spectrum_matches_mode_sum() {
    let cfg = slab_spectrum_config(20.0, 9);
    let emp = empirical_spectrum(&cfg).unwrap();
    assert!(emp.segments >= 32);
    let basis = build_basis(&cfg.geometry, &cfg.gas, Truncation::new(100)).unwrap();
    let grid: Vec<f64> = (0..2001).map(|i| i as f64 * 0.02).collect();
    let analytic = spin_noise_spectrum(&basis, &cfg.probe.unwrap(), cfg.field, SpinStatistics::Polarized, &grid).unwrap();
    let cmp = shape_ratio(&emp.spectrum, &analytic, 2).unwrap();
    assert!(cmp.min_ratio >= 0.8 && cmp.max_ratio <= 1.25, "[{}, {}]", cmp.min_ratio, cmp.max_ratio);

    let s = &emp.spectrum;
    let (imax, _) = s.sxx.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let bin = s.frequencies[1] - s.frequencies[0];
    assert!((s.frequencies[imax] - 20.0).abs() <= 1.5 * bin);
}

#[test]
fn spectrum_estimate_is_bit_reproducible() {
    let mut cfg = slab_spectrum_config(20.0, 4);
    cfg.total_time = 2.0;
    cfg.burn_in = 0.1;
    cfg.segment_len = 256;
    let a = empirical_spectrum(&cfg).unwrap();
    let b = empirical_spectrum(&cfg).unwrap();
    assert_eq!(a.spectrum.sxx, b.spectrum.sxx);
    cfg.seed += 1;
    assert_ne!(empirical_spectrum(&cfg).unwrap().spectrum.sxx, a.spectrum.sxx);
}
