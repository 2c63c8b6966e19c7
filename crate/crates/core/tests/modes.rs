mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use spinmodes::modes::{
    asymptotic_gamma, boundary_residual, build_basis, coated_gamma, eval_mode, robin_roots, root_within_ulp, Axis, CellGeometry, Parity, SymmetryClass,
    Truncation, WallGasSpec, WallQuality, ROOT_RESIDUAL_TOL,
};
use spinmodes::quadrature::{integrate, Tolerance};

const EVEN: SymmetryClass = SymmetryClass::Axial { axis: Axis::X, parity: Parity::Even };
const ODD: SymmetryClass = SymmetryClass::Axial { axis: Axis::X, parity: Parity::Odd };

fn gas(wall: WallQuality) -> WallGasSpec {
    WallGasSpec::new(1.0, 0.5e-4, wall).unwrap()
}

fn root_ok(g: &CellGeometry, w: &WallGasSpec, class: SymmetryClass, k: f64) -> bool {
    boundary_residual(g, w, class, k).unwrap() < ROOT_RESIDUAL_TOL || root_within_ulp(g, w, class, k).unwrap()
}

#[test]
fn dirichlet_slab_roots_are_odd_and_even_multiples_of_pi() {
    let slab = CellGeometry::slab(1.0).unwrap();
    let w = gas(WallQuality::Depolarizing);
    let even = robin_roots(&slab, &w, EVEN, 20).unwrap();
    let odd = robin_roots(&slab, &w, ODD, 20).unwrap();
    for (n, (ke, ko)) in even.iter().zip(&odd).enumerate() {
        assert!((ke - (2 * n + 1) as f64 * PI).abs() < 1e-10 * ke.max(1.0));
        assert!((ko - (2 * n + 2) as f64 * PI).abs() < 1e-10 * ko.max(1.0));
    }
}

#[test]
fn dirichlet_slab_rates_are_squares_when_interleaved() {
    let slab = CellGeometry::slab(1.0).unwrap();
    let basis = build_basis(&slab, &gas(WallQuality::Depolarizing), Truncation::new(15)).unwrap();
    let unit = PI * PI;
    for (n, m) in basis.modes.iter().enumerate() {
        let ratio = m.gamma / unit;
        assert!((ratio - ((n + 1) * (n + 1)) as f64).abs() < 1e-9 * ratio, "mode {n}: {ratio}");
    }
}

#[test]
fn neumann_lowest_root_is_exactly_zero_in_every_geometry() {
    let w = gas(WallQuality::Preserving);
    let cases = [
        (CellGeometry::slab(1.0).unwrap(), EVEN),
        (CellGeometry::rectangular(1.0, 2.0, 3.0).unwrap(), SymmetryClass::Axial { axis: Axis::Y, parity: Parity::Even }),
        (CellGeometry::cylinder(1.0, 3.0).unwrap(), SymmetryClass::Radial { order: 0 }),
        (CellGeometry::sphere(1.0).unwrap(), SymmetryClass::Radial { order: 0 }),
    ];
    for (g, class) in cases {
        let roots = robin_roots(&g, &w, class, 3).unwrap();
        assert_eq!(roots[0], 0.0, "{}", g.name());
        assert!(roots[1] > 0.0);
    }
}

#[test]
fn bessel_and_sinc_dirichlet_limits() {
    let w = gas(WallQuality::Depolarizing);
    let cyl = CellGeometry::cylinder(1.0, 3.0).unwrap();
    let k0 = robin_roots(&cyl, &w, SymmetryClass::Radial { order: 0 }, 1).unwrap()[0];
    // first zero of J0 by a sign scan of its power series
    let j0 = |x: f64| {
        let (mut term, mut sum) = (1.0, 1.0);
        for m in 1..60 {
            term *= -(x * x / 4.0) / (m * m) as f64;
            sum += term;
        }
        sum
    };
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if j0(mid) > 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    assert!((k0 - lo).abs() < 1e-10);
    let sphere = CellGeometry::sphere(2.0).unwrap();
    let k = robin_roots(&sphere, &w, SymmetryClass::Radial { order: 0 }, 1).unwrap()[0];
    assert!((k - PI / 2.0).abs() < 1e-12);

    let basis = build_basis(&cyl, &w, Truncation::new(2)).unwrap();
    let expected = lo * lo + (PI / 3.0).powi(2);
    assert!((basis.modes[0].gamma - expected).abs() < 1e-9 * expected);
    let edge = eval_mode(&basis.modes[0], &cyl, [1.0, 0.0, 0.0]).unwrap();
    assert!(edge.norm() < 1e-9);
}

#[test]
fn robin_slab_roots_match_dense_scan() {
    let slab = CellGeometry::slab(1.0).unwrap();
    for n in [1.0, 1e2, 1e4, 1e6] {
        let w = gas(WallQuality::Finite(n));
        let h = common::slab_robin_length(0.5e-4, n);
        for (class, even) in [(EVEN, true), (ODD, false)] {
            let lib = robin_roots(&slab, &w, class, 5).unwrap();
            let oracle = common::slab_roots_dense_scan(1.0, h, even, 5);
            for (a, b) in lib.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9 * a.max(1.0), "N={n}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn uniform_mode_amplitudes() {
    let w = gas(WallQuality::Preserving);
    let slab = CellGeometry::slab(2.0).unwrap();
    let b = build_basis(&slab, &w, Truncation::new(2)).unwrap();
    assert!((b.modes[0].amplitude - 0.5f64.sqrt()).abs() < 1e-15);
    let sphere = CellGeometry::sphere(1.5).unwrap();
    let b = build_basis(&sphere, &w, Truncation::new(2)).unwrap();
    let u = eval_mode(&b.modes[0], &sphere, [0.3, -0.2, 0.1]).unwrap();
    assert!((u.re - (4.0 * PI * 1.5f64.powi(3) / 3.0).powf(-0.5)).abs() < 1e-14);
}

#[test]
fn slab_modes_are_orthonormal() {
    let slab = CellGeometry::slab(1.0).unwrap();
    let b = build_basis(&slab, &gas(WallQuality::Finite(30.0)), Truncation::new(6)).unwrap();
    for i in 0..b.len() {
        for j in 0..=i {
            let f = |x: f64| {
                eval_mode(&b.modes[i], &slab, [x, 0.0, 0.0]).unwrap().re * eval_mode(&b.modes[j], &slab, [x, 0.0, 0.0]).unwrap().re
            };
            let v = integrate(f, -0.5, 0.5, Tolerance::default()).value;
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-9, "<{i}|{j}> = {v}");
        }
    }
}

#[test]
fn asymptotic_rate_examples() {
    let cube = CellGeometry::rectangular(1.0, 1.0, 1.0).unwrap();
    assert!((asymptotic_gamma(&cube, 1.0, 10).unwrap() - 986.960440108936).abs() < 1e-9);
    assert!((asymptotic_gamma(&cube, 1.0, 1).unwrap() - PI * PI).abs() < 1e-12);
    let slab = CellGeometry::slab(1.0).unwrap();
    let b = build_basis(&slab, &gas(WallQuality::Depolarizing), Truncation::new(30)).unwrap();
    for n in 20..b.len() {
        let ratio = asymptotic_gamma(&slab, 1.0, n).unwrap() / b.modes[n].gamma;
        assert!((0.5..2.0).contains(&ratio), "n={n}: {ratio}");
    }
}

#[test]
fn lowest_rate_falls_with_wall_quality() {
    let cyl = CellGeometry::cylinder(1.0, 3.0).unwrap();
    let mut last = f64::INFINITY;
    for n in [1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6] {
        let g0 = build_basis(&cyl, &gas(WallQuality::Finite(n)), Truncation::new(2)).unwrap().modes[0].gamma;
        assert!(g0 < last);
        last = g0;
    }
    let asymptote = coated_gamma(&gas(WallQuality::Finite(1e6)), &cyl).unwrap();
    // first-order asymptote; the next correction is a few parts per thousand here
    assert!((last / asymptote - 1.0).abs() < 1e-2, "{last} vs {asymptote}");
}

fn wall_quality() -> impl Strategy<Value = f64> {
    (0.0f64..6.5).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn roots_satisfy_boundary_equation(n in wall_quality(), lambda in 1e-5f64..1e-2, len in 0.2f64..5.0, order in 0u32..4) {
        let w = WallGasSpec::new(1.0, lambda, WallQuality::Finite(n)).unwrap();
        for g in [CellGeometry::slab(len).unwrap(), CellGeometry::cylinder(len, 2.0 * len).unwrap(), CellGeometry::sphere(len).unwrap()] {
            let class = if g.is_one_dimensional() { EVEN } else { SymmetryClass::Radial { order } };
            for k in robin_roots(&g, &w, class, 8).unwrap() {
                prop_assert!(root_ok(&g, &w, class, k), "{} N={n} k={k}", g.name());
            }
        }
    }

    #[test]
    fn robin_roots_interlace_between_limits(n in wall_quality(), lambda in 1e-5f64..1e-2, order in 0u32..3) {
        let sphere = CellGeometry::sphere(1.0).unwrap();
        let class = SymmetryClass::Radial { order };
        let w = |q| WallGasSpec::new(1.0, lambda, q).unwrap();
        let neu = robin_roots(&sphere, &w(WallQuality::Preserving), class, 6).unwrap();
        let dir = robin_roots(&sphere, &w(WallQuality::Depolarizing), class, 6).unwrap();
        let rob = robin_roots(&sphere, &w(WallQuality::Finite(n)), class, 6).unwrap();
        let more = robin_roots(&sphere, &w(WallQuality::Finite(2.0 * n)), class, 6).unwrap();
        for i in 0..6 {
            prop_assert!(neu[i] < rob[i] && rob[i] < dir[i], "i={i}: {} {} {}", neu[i], rob[i], dir[i]);
            prop_assert!(more[i] <= rob[i]);
        }
    }

    #[test]
    fn basis_is_sorted_and_json_stable(n in wall_quality(), per in 1usize..6) {
        let cyl = CellGeometry::cylinder(1.0, 3.0).unwrap();
        let b = build_basis(&cyl, &gas(WallQuality::Finite(n)), Truncation::new(per).with_max_order(2).with_axial(per)).unwrap();
        prop_assert!(b.modes.windows(2).all(|p| p[0].gamma <= p[1].gamma));
        let back = spinmodes::modes::ModeBasis::from_json(&b.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.fingerprint(), b.fingerprint());
        prop_assert_eq!(back, b);
    }
}
