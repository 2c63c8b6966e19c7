use std::f64::consts::PI;

use proptest::prelude::*;
use spinmodes::dynamics::{
    full_width_half_max, lorentzian_spectrum, mode_evolution, mode_variance, noise_content, noise_covariance, spin_noise_spectrum, squeezing_db,
    squeezing_decay, squeezing_from_weights, FieldSpec, ModeWeights, SpinStatistics, WeightedMode,
};
use spinmodes::modes::{build_basis, Axis, CellGeometry, ModeBasis, Truncation, WallGasSpec, WallQuality};
use spinmodes::overlaps::ProbeProfile;
use spinmodes::quadrature::{integrate, Tolerance};

fn weights(pairs: &[(f64, f64)]) -> ModeWeights {
    ModeWeights {
        modes: pairs.iter().enumerate().map(|(i, &(w, g))| WeightedMode { label: format!("m{i}"), weight: w, gamma: g }).collect(),
    }
}

fn cell_basis(gas: WallGasSpec, per: usize) -> ModeBasis {
    build_basis(&CellGeometry::cylinder(1.0, 3.0).unwrap(), &gas, Truncation::new(per).even_only(true)).unwrap()
}

fn buffer() -> WallGasSpec {
    WallGasSpec::new(1.0, 0.5e-4, WallQuality::Finite(1.0)).unwrap()
}

fn coated() -> WallGasSpec {
    WallGasSpec::new(3.0e3, 0.1, WallQuality::Finite(1e6)).unwrap()
}

/// Integral of an analytic spectrum over the whole line, after mapping
/// `f - f0 = s tan(theta)` onto a finite interval.
fn integrated_power(s: &spinmodes::dynamics::SpectrumResult, scale: f64) -> f64 {
    let half = PI / 2.0;
    let f = |th: f64| {
        let c = th.cos();
        s.evaluate(s.f0 + scale * th.tan()) * scale / (c * c)
    };
    let tol = Tolerance { abs: 1e-15, rel: 1e-10, max_intervals: 20_000 };
    integrate(f, -half, half, tol).value
}

#[test]
fn mode_evolution_examples() {
    let a = mode_evolution(num_complex::Complex64::new(1.0, 0.0), 1.0, 0.0, 2f64.ln());
    assert!((a.re - 0.5).abs() < 1e-15);
    assert!((noise_covariance(1.0, 2f64.ln()) - 0.75).abs() < 1e-15);
    assert_eq!(noise_covariance(3.0, 0.0), 0.0);
    assert!((noise_covariance(3.0, 1e3) - 1.0).abs() < 1e-15);
    for t in [0.0, 0.1, 1.0, 10.0] {
        assert!((mode_variance(0.25, 2.0, t) - 0.25).abs() < 1e-16);
    }
}

#[test]
fn spectrum_power_matches_weight_sum() {
    let basis = cell_basis(buffer(), 60);
    let probe = ProbeProfile::gaussian(0.1, Axis::Z).unwrap();
    let field = FieldSpec::new(250.0).unwrap();
    for stats in [SpinStatistics::Polarized, SpinStatistics::Unpolarized { spin: 0.5 }] {
        let s = spin_noise_spectrum(&basis, &probe, field, stats, &[250.0]).unwrap();
        let expected = 0.25 * s.p_tilde * s.weights.iter().sum::<f64>();
        let got = integrated_power(&s, 100.0);
        assert!((got / expected - 1.0).abs() < 1e-6, "{got} vs {expected}");
        assert_eq!(s.total_power(), expected);
    }
}

#[test]
fn single_lorentzian_noise_content_is_half() {
    let w = weights(&[(0.7, 12.5)]);
    let field = FieldSpec::new(40.0).unwrap();
    let grid: Vec<f64> = (0..4001).map(|i| 40.0 - 20.0 + 0.01 * i as f64).collect();
    let s = lorentzian_spectrum(&w, field, SpinStatistics::Polarized, &grid, None).unwrap();
    assert!((noise_content(&s).unwrap() - 0.5).abs() < 1e-6);
    assert!((full_width_half_max(&s).unwrap() - 12.5 / PI).abs() < 1e-9);
}

#[test]
fn peak_sits_at_larmor_frequency() {
    let basis = cell_basis(buffer(), 40);
    let probe = ProbeProfile::gaussian(0.1, Axis::Z).unwrap();
    let grid: Vec<f64> = (0..2001).map(|i| 900.0 + 0.1 * i as f64).collect();
    let s = spin_noise_spectrum(&basis, &probe, FieldSpec::new(1000.0).unwrap(), SpinStatistics::Polarized, &grid).unwrap();
    let (imax, _) = s.sxx.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert_eq!(s.frequencies[imax], 1000.0);
}

#[test]
fn buffer_cell_line_is_a_cusp() {
    let basis = cell_basis(buffer(), 120);
    let probe = ProbeProfile::gaussian(0.1, Axis::Z).unwrap();
    let grid: Vec<f64> = (0..4001).map(|i| -200.0 + 0.1 * i as f64).collect();
    let s = spin_noise_spectrum(&basis, &probe, FieldSpec::new(0.0).unwrap(), SpinStatistics::Polarized, &grid).unwrap();
    // a Lorentzian with the same FWHM and peak holds far more power near the line than a cusp does
    let fwhm = full_width_half_max(&s).unwrap();
    let peak = s.evaluate(0.0);
    let lor = |f: f64| peak / (1.0 + (2.0 * f / fwhm).powi(2));
    let far = 20.0 * fwhm;
    assert!(s.evaluate(far) > 3.0 * lor(far));
    assert!(noise_content(&s).unwrap() < 0.5);
}

#[test]
fn coated_cell_shows_narrow_feature_on_broad_base() {
    let basis = cell_basis(coated(), 120);
    let probe = ProbeProfile::gaussian(0.1, Axis::Z).unwrap();
    let s = spin_noise_spectrum(&basis, &probe, FieldSpec::new(0.0).unwrap(), SpinStatistics::Polarized, &[0.0]).unwrap();
    let g0 = basis.modes[0].gamma;
    assert!(g0 / PI < 1.0);
    let shoulder = s.evaluate(10.0);
    assert!(s.evaluate(0.0) / shoulder > 10.0);
    // the shoulder is the broad part of the line, not the tail of the narrow one
    let narrow = 0.25 * s.p_tilde * s.weights[0] * 2.0 * g0 / (g0 * g0 + 400.0 * PI * PI);
    assert!(shoulder > 10.0 * narrow);
}

#[test]
fn buffer_line_carries_more_noise_content_for_narrow_beams() {
    let b = cell_basis(buffer(), 100);
    let c = cell_basis(coated(), 100);
    let zeta = |basis: &ModeBasis, w0: f64| {
        let probe = ProbeProfile::gaussian(w0, Axis::Z).unwrap();
        let fast = 4.0 * PI * PI * basis.wall.diffusion / (w0 * w0);
        let grid = spinmodes::grid::symmetric_log(0.0, basis.modes[0].gamma * 1e-3, fast * 1e3, 400).unwrap();
        noise_content(&spin_noise_spectrum(basis, &probe, FieldSpec::new(0.0).unwrap(), SpinStatistics::Polarized, &grid).unwrap()).unwrap()
    };
    let narrow = (zeta(&b, 0.1), zeta(&c, 0.1));
    let wide = (zeta(&b, 1.0), zeta(&c, 1.0));
    assert!(narrow.0 > narrow.1);
    assert!(wide.0 - wide.1 < narrow.0 - narrow.1);
    assert!(wide.1 > narrow.1);
}

#[test]
fn squeezing_endpoints_with_complete_weights() {
    let w = weights(&[(0.55, 3.0), (0.3, 40.0), (0.15, 900.0)]);
    let r = squeezing_from_weights(&w, 0.05, &[0.0, 1e-3, 0.1, 1e3], None).unwrap();
    assert!((r.variance[0] - 0.05).abs() < 1e-6);
    assert!((r.variance[3] - 0.25).abs() < 1e-6);
}

#[test]
fn truncated_basis_start_reflects_missing_weight() {
    let basis = cell_basis(buffer(), 60);
    let probe = ProbeProfile::gaussian(0.2, Axis::Z).unwrap();
    let r = squeezing_decay(&basis, &probe, 0.05, &[0.0]).unwrap();
    let s = r.captured_weight;
    assert!((r.variance[0] - (s * s * (0.05 - 0.25) + 0.25)).abs() < 1e-15);
}

#[test]
fn squeezing_lifetime_grows_with_beam_waist() {
    let basis = cell_basis(buffer(), 120);
    let mut last = 0.0;
    for w0 in [0.1, 0.2, 0.4, 0.8] {
        let probe = ProbeProfile::gaussian(w0, Axis::Z).unwrap();
        let r = squeezing_decay(&basis, &probe, 0.05, &[0.0]).unwrap();
        let life = r.lifetime.unwrap();
        assert!(life > last, "w0={w0}: {life}");
        last = life;
    }
}

#[test]
fn squeezing_db_sign_convention() {
    assert_eq!(squeezing_db(0.25), 0.0);
    assert!((squeezing_db(0.025) - 10.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn squeezed_variance_relaxes_monotonically(
        raw in prop::collection::vec((0.01f64..1.0, 0.0f64..1e4), 1..8),
        x2 in 0.001f64..0.2499,
    ) {
        let w = weights(&raw);
        let t: Vec<f64> = (0..200).map(|i| 1e-6 * 1.1f64.powi(i)).collect();
        let r = squeezing_from_weights(&w, x2, &t, None).unwrap();
        prop_assert!(r.variance.windows(2).all(|p| p[1] >= p[0]));
        prop_assert!(r.variance.iter().all(|v| *v <= 0.25 + 1e-15));
    }

    #[test]
    fn spectrum_is_shift_covariant(
        raw in prop::collection::vec((0.01f64..1.0, 0.1f64..1e3), 1..6),
        f0 in -1e3f64..1e3,
    ) {
        let w = weights(&raw);
        let offsets: Vec<f64> = (0..101).map(|i| -50.0 + i as f64).collect();
        let shifted: Vec<f64> = offsets.iter().map(|d| f0 + d).collect();
        let a = lorentzian_spectrum(&w, FieldSpec::new(0.0).unwrap(), SpinStatistics::Polarized, &offsets, None).unwrap();
        let b = lorentzian_spectrum(&w, FieldSpec::new(f0).unwrap(), SpinStatistics::Polarized, &shifted, None).unwrap();
        for (x, y) in a.sxx.iter().zip(&b.sxx) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn power_sum_rule_for_random_weights(raw in prop::collection::vec((0.01f64..1.0, 0.1f64..1e4), 1..6)) {
        let w = weights(&raw);
        let s = lorentzian_spectrum(&w, FieldSpec::new(0.0).unwrap(), SpinStatistics::Polarized, &[0.0], None).unwrap();
        let gmin = raw.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let got = integrated_power(&s, gmin);
        prop_assert!((got / s.total_power() - 1.0).abs() < 1e-6);
    }
}
