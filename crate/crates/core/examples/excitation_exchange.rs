//! Transfer of a single collective excitation from potassium spins to
//! helium-3 spins in a 5 mm sphere. The potassium modes feel the wall, the
//! helium modes do not, so the transfer is limited by the mode overlap.
//!
//! Run with `cargo run --release --example excitation_exchange`.

use spinmodes::exchange::{exchange_fidelity, fidelity_map, transfer_amplitudes, ExchangeSpec, ExchangeSystem, SpeciesSpec};
use spinmodes::grid::logarithmic;
use spinmodes::modes::WallQuality;

fn main() -> spinmodes::Result<()> {
    let spec = ExchangeSpec {
        radius: 0.5,
        alkali: SpeciesSpec::alkali(0.35, 5e-6, WallQuality::Depolarizing, 6.0)?,
        noble: SpeciesSpec::noble_gas(0.7, 2e-6)?,
        alkali_modes: 70,
        noble_modes: 70,
    };
    let gamma_wall = std::f64::consts::PI.powi(2) * spec.alkali.gas.diffusion / (spec.radius * spec.radius);
    println!("wall rate pi^2 D / R^2 = {gamma_wall:.3} 1/s (1/{:.1} ms)", 1e3 / gamma_wall);

    let sys = ExchangeSystem::new(&spec.with_alkali_wall(WallQuality::Finite(1e7)), 1000.0)?;
    let best = exchange_fidelity(&sys, None)?;
    println!("N = 1e7, J = 1000/s: F = {:.6} at t = {:.4} ms", best.fidelity, 1e3 * best.t_opt);
    let times: Vec<f64> = (1..=5).map(|i| best.t_opt * i as f64 / 5.0).collect();
    let trace = transfer_amplitudes(&sys, &times)?;
    for (t, noble) in times.iter().zip(&trace.noble) {
        let pop: f64 = noble.iter().map(|a| a.norm_sqr()).sum();
        println!("  t = {:.4} ms  noble-gas population {pop:.4}", 1e3 * t);
    }

    let j = logarithmic(1.0, 1e3, 7)?;
    let n = [1.0, 1e3, 1e5, 1e7];
    let map = fidelity_map(&spec, &j, &n)?;
    println!("\nF(J, N)      N=1      N=1e3    N=1e5    N=1e7");
    for (i, jv) in j.iter().enumerate() {
        let row: Vec<String> = map.fidelity[i].iter().map(|f| format!("{f:.5}")).collect();
        println!("J={jv:<8.1}  {}", row.join("  "));
    }
    Ok(())
}
