//! Boundary roots of a 1 cm slab with a 0.5 um mean free path as the wall
//! quality goes from fully depolarizing to fully preserving, followed by the
//! slowest modes of a cylindrical buffer-gas cell.
//!
//! Run with `cargo run --release --example mode_table`.

use std::f64::consts::PI;

use spinmodes::modes::{build_basis, robin_roots, Axis, CellGeometry, Parity, SymmetryClass, Truncation, WallGasSpec, WallQuality};

fn main() -> spinmodes::Result<()> {
    let slab = CellGeometry::slab(1.0)?;
    let even = SymmetryClass::Axial { axis: Axis::X, parity: Parity::Even };
    println!("symmetric slab roots k L / pi");
    let walls = [
        WallQuality::Depolarizing,
        WallQuality::Finite(1.0),
        WallQuality::Finite(1e2),
        WallQuality::Finite(1e4),
        WallQuality::Finite(1e6),
        WallQuality::Preserving,
    ];
    for wall in walls {
        let gas = WallGasSpec::new(1.0, 0.5e-4, wall)?;
        let roots = robin_roots(&slab, &gas, even, 5)?;
        let scaled: Vec<String> = roots.iter().map(|k| format!("{:.6}", k / PI)).collect();
        println!("  N = {:>9}  {}", wall.label(), scaled.join("  "));
    }

    let cell = CellGeometry::cylinder(1.0, 3.0)?;
    let gas = WallGasSpec::new(1.0, 0.5e-4, WallQuality::Finite(1.0))?;
    let basis = build_basis(&cell, &gas, Truncation::new(4).with_max_order(1))?;
    println!("\nslowest cylinder modes (R = 1 cm, L = 3 cm, D = 1 cm^2/s)");
    for m in basis.modes.iter().take(8) {
        println!("  {:<12} k = {:8.5} 1/cm  gamma = {:9.5} 1/s", m.label(), m.k, m.gamma);
    }
    for w in gas.validity_warnings(&cell) {
        println!("warning: {w}");
    }
    Ok(())
}
