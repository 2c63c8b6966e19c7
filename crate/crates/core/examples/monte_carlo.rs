//! Random-walk cross-checks of the mode expansion: decay of the lowest slab
//! mode, free-space spreading, and the spin-noise line of a buffer-gas cell.
//!
//! Run with `cargo run --release --example monte_carlo`.

use std::time::Instant;

use spinmodes::dynamics::{spin_noise_spectrum, FieldSpec, SpinStatistics};
use spinmodes::modes::{build_basis, Axis, CellGeometry, Truncation, WallGasSpec, WallQuality};
use spinmodes::oracle::{empirical_spectrum, mode_decay_check, msd_check, shape_ratio, SimConfig, WallRule};
use spinmodes::overlaps::ProbeProfile;

fn main() -> spinmodes::Result<()> {
    let clock = Instant::now();
    let slab = CellGeometry::slab(1.0)?;
    let gas = WallGasSpec::new(1.0, 1e-3, WallQuality::Depolarizing)?;
    let basis = build_basis(&slab, &gas, Truncation::new(3))?;
    let mut cfg = SimConfig::new(slab, gas, FieldSpec::new(0.0)?, 1e-5);
    cfg.n_particles = 100_000;
    cfg.total_time = 0.25;
    cfg.sample_every = 100;
    let fit = mode_decay_check(&cfg, &basis.modes[0])?;
    println!(
        "slab decay: fitted {:.4} 1/s, modes {:.4} 1/s, R^2 {:.5}, window {:?} ({:.1} s)",
        fit.gamma,
        basis.modes[0].gamma,
        fit.r_squared,
        fit.window,
        clock.elapsed().as_secs_f64()
    );

    let clock = Instant::now();
    let msd = msd_check(1.0, 1e-3, 100, 100_000, 7)?;
    println!("free MSD: {:.5} vs {:.5}, z = {:.2} ({:.1} s)", msd.msd, msd.expected, msd.z_score(), clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let cell = CellGeometry::cylinder(1.0, 3.0)?;
    let buffer = WallGasSpec::new(1.0, 0.5e-4, WallQuality::Depolarizing)?;
    let probe = ProbeProfile::gaussian(0.1, Axis::Z)?;
    let field = FieldSpec::new(100.0)?;
    let mut cfg = SimConfig::new(cell, buffer, field, 4e-5);
    cfg.probe = Some(probe);
    cfg.n_particles = 1024;
    cfg.burn_in = 0.75;
    cfg.total_time = 8.0;
    cfg.sample_every = 3;
    cfg.segment_len = 1 << 16;
    cfg.wall_rule = WallRule::Rethermalize;
    cfg.seed = 11;
    let emp = empirical_spectrum(&cfg)?;
    let basis = build_basis(&cell, &buffer, Truncation::new(200).even_only(true))?;
    let grid: Vec<f64> = (0..2001).map(|i| 100.0 - 50.0 + 0.05 * i as f64).collect();
    let analytic = spin_noise_spectrum(&basis, &probe, field, SpinStatistics::Polarized, &grid)?;
    let cmp = shape_ratio(&emp.spectrum, &analytic, 2)?;
    println!(
        "buffer-cell line: {} segments, shape ratio in [{:.3}, {:.3}] over {} bins ({:.1} s)",
        emp.segments,
        cmp.min_ratio,
        cmp.max_ratio,
        cmp.ratio.len(),
        clock.elapsed().as_secs_f64()
    );
    for (f, r) in cmp.frequencies.iter().zip(&cmp.ratio).step_by(4) {
        println!("  {f:9.3} Hz  {r:.3}");
    }
    Ok(())
}
