//! Overlap coefficients between the spherically symmetric modes of a sphere
//! with depolarizing walls and those of the same sphere with spin-preserving
//! walls, computed in closed form and by quadrature.
//!
//! Run with `cargo run --release --example overlap_table`.

use spinmodes::modes::{build_basis, CellGeometry, Truncation, WallGasSpec, WallQuality};
use spinmodes::overlaps::{mode_overlap, mode_overlap_quadrature};

fn main() -> spinmodes::Result<()> {
    let sphere = CellGeometry::sphere(1.0)?;
    let lossy = WallGasSpec::new(1.0, 1e-5, WallQuality::Depolarizing)?;
    let inert = WallGasSpec::new(1.0, 1e-5, WallQuality::Preserving)?;
    let a = build_basis(&sphere, &lossy, Truncation::new(5))?;
    let b = build_basis(&sphere, &inert, Truncation::new(5))?;
    let closed = mode_overlap(&a, &b)?;
    let quad = mode_overlap_quadrature(&a, &b)?;

    print!("{:>8}", "c_mn");
    for n in 0..closed.ncols() {
        print!("{:>9}", format!("n={n}"));
    }
    println!();
    let mut worst = 0.0f64;
    for m in 0..closed.nrows() {
        print!("{:>8}", format!("m={m}"));
        for n in 0..closed.ncols() {
            print!("{:>9.4}", closed.get(m, n));
            worst = worst.max((closed.get(m, n) - quad.get(m, n)).abs());
        }
        println!();
    }
    println!("c_00 - sqrt(6)/pi = {:.3e}", closed.get(0, 0) - 6f64.sqrt() / std::f64::consts::PI);
    println!("largest closed-form vs quadrature difference: {worst:.3e}");
    Ok(())
}
