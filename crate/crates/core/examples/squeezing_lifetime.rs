//! Loss of spin squeezing from diffusion: the probed quadrature of a
//! buffer-gas cell starts 7 dB squeezed and relaxes toward the vacuum
//! variance, faster for narrow beams. A 25 dB state spread uniformly over
//! the cross section is shown against the number of radial modes kept.
//!
//! Run with `cargo run --release --example squeezing_lifetime`.

use spinmodes::dynamics::{squeezing_decay, squeezing_from_weights, ModeWeights};
use spinmodes::grid::logarithmic;
use spinmodes::modes::{build_basis, Axis, CellGeometry, Truncation, WallGasSpec, WallQuality};
use spinmodes::overlaps::ProbeProfile;

fn main() -> spinmodes::Result<()> {
    let cell = CellGeometry::cylinder(1.0, 3.0)?;
    let gas = WallGasSpec::new(1.0, 0.5e-4, WallQuality::Finite(1.0))?;
    let basis = build_basis(&cell, &gas, Truncation::new(200).even_only(true))?;
    let times = logarithmic(1e-6, 2.0, 200)?;
    println!("w0 (mm)  half-dB lifetime (ms)  single-mode reference (ms)");
    for w0_mm in [1.0, 2.0, 4.0, 8.0] {
        let probe = ProbeProfile::gaussian(0.1 * w0_mm, Axis::Z)?;
        let r = squeezing_decay(&basis, &probe, 0.05, &times)?;
        let ms = |t: Option<f64>| t.map_or("-".to_string(), |t| format!("{:.4}", 1e3 * t));
        println!("{w0_mm:7.0}  {:>21}  {:>26}", ms(r.lifetime), ms(r.reference_lifetime));
    }

    let x2_0 = 0.25 * 10f64.powf(-2.5);
    let tw = 1.0 / (std::f64::consts::PI.powi(2) * gas.diffusion);
    let times: Vec<f64> = logarithmic(1e-7, 1.0, 100)?.into_iter().map(|t| t * tw).collect();
    println!("\n25 dB uniform squeezing: radial modes, half-dB lifetime / T_w");
    for modes in [10, 100, 500, 1000] {
        let weights = ModeWeights::radial_uniform(&cell, &gas, modes)?;
        let r = squeezing_from_weights(&weights, x2_0, &times, None)?;
        println!("  {modes:5}  {:.6e}", r.lifetime.unwrap_or(f64::NAN) / tw);
    }
    Ok(())
}
