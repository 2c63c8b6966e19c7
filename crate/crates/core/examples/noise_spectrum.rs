//! Spin-noise spectra of a buffer-gas cell and a coated cell probed by a
//! 1 mm Gaussian beam, and the noise content for a range of beam waists.
//!
//! Run with `cargo run --release --example noise_spectrum`.

use spinmodes::dynamics::{full_width_half_max, noise_content, spin_noise_spectrum, FieldSpec, SpinStatistics};
use spinmodes::modes::{build_basis, Axis, CellGeometry, Truncation, WallGasSpec, WallQuality};
use spinmodes::overlaps::ProbeProfile;

fn main() -> spinmodes::Result<()> {
    let cell = CellGeometry::cylinder(1.0, 3.0)?;
    let buffer = WallGasSpec::new(1.0, 0.5e-4, WallQuality::Finite(1.0))?;
    let coated = WallGasSpec::new(3.0e3, 0.1, WallQuality::Finite(1e6))?;
    let truncation = Truncation::new(200).even_only(true);
    let field = FieldSpec::new(1000.0)?;

    for (name, gas, span) in [("buffer", buffer, 2000.0), ("coated", coated, 2.0e6)] {
        let basis = build_basis(&cell, &gas, truncation)?;
        let probe = ProbeProfile::gaussian(0.1, Axis::Z)?;
        let grid: Vec<f64> = (0..4001).map(|i| 1000.0 - span + i as f64 * span / 2000.0).collect();
        let s = spin_noise_spectrum(&basis, &probe, field, SpinStatistics::Polarized, &grid)?;
        let fwhm = full_width_half_max(&s)?;
        let gw = s.reference_gamma.unwrap_or(f64::NAN);
        println!(
            "{name}: modes {} captured weight {:.6} FWHM {:.4} Hz reference FWHM {:.4} Hz zeta {:.4} slowest rate {:.4e} 1/s",
            basis.len(),
            s.weights.iter().sum::<f64>(),
            fwhm,
            gw / std::f64::consts::PI,
            noise_content(&s)?,
            s.gammas.iter().copied().fold(f64::INFINITY, f64::min),
        );
    }

    println!("w0/R  zeta_buffer  zeta_coated");
    for w0 in [0.05, 0.1, 0.2, 0.4, 0.7, 1.0] {
        let mut row = Vec::new();
        for gas in [buffer, coated] {
            let basis = build_basis(&cell, &gas, truncation)?;
            let probe = ProbeProfile::gaussian(w0, Axis::Z)?;
            let slow = basis.modes[0].gamma;
            let fast = 4.0 * std::f64::consts::PI.powi(2) * gas.diffusion / (w0 * w0);
            let grid = spinmodes::grid::symmetric_log(1000.0, slow * 1e-3, fast * 1e3, 400)?;
            let s = spin_noise_spectrum(&basis, &probe, field, SpinStatistics::Polarized, &grid)?;
            row.push(noise_content(&s)?);
        }
        println!("{w0:.2}  {:.4}  {:.4}", row[0], row[1]);
    }
    Ok(())
}
