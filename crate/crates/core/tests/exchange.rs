mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use spinmodes::exchange::{exchange_fidelity, fidelity_map, transfer_amplitudes, ExchangeSpec, ExchangeSystem, SpeciesSpec};
use spinmodes::modes::WallQuality;

fn fig4(modes: usize) -> ExchangeSpec {
    ExchangeSpec {
        radius: 0.5,
        alkali: SpeciesSpec::alkali(0.35, 5e-6, WallQuality::Depolarizing, 6.0).unwrap(),
        noble: SpeciesSpec::noble_gas(0.7, 2e-6).unwrap(),
        alkali_modes: modes,
        noble_modes: modes,
    }
}

#[test]
fn single_mode_rabi_toy_transfers_completely() {
    let j = 37.0;
    let sys = ExchangeSystem::from_parts(vec![0.0], vec![0.0], DMatrix::from_element(1, 1, 1.0), j, vec![1.0]).unwrap();
    let best = exchange_fidelity(&sys, None).unwrap();
    assert!(best.fidelity >= 1.0 - 1e-6);
    assert!((best.t_opt * j - PI / 2.0).abs() < 1e-6);
    let t: Vec<f64> = (1..50).map(|i| 0.01 * i as f64).collect();
    let tr = transfer_amplitudes(&sys, &t).unwrap();
    for (ti, b) in t.iter().zip(&tr.noble) {
        assert!((b[0].norm_sqr() - (j * ti).sin().powi(2)).abs() < 1e-12);
    }
}

/// Two alkali modes and one noble-gas mode, with decay on every mode.
fn three_mode_system(j: f64) -> ExchangeSystem {
    let c = DMatrix::from_row_slice(2, 1, &[0.8, -0.45]);
    ExchangeSystem::from_parts(vec![3.0, 11.0], vec![0.7], c, j, vec![0.8, -0.45]).unwrap()
}

#[test]
fn two_excitation_amplitude_is_square_of_single_excitation_amplitude() {
    let sys = three_mode_system(25.0);
    let h = common::exchange_hamiltonian(&sys.alkali_decay, &sys.noble_decay, &sys.coupling, sys.j);
    let times: Vec<f64> = (1..=60).map(|i| 0.002 * i as f64).collect();
    let fock = common::fock_double_excitation(&h, &sys.alpha, 2, &times);
    let single = transfer_amplitudes(&sys, &times).unwrap();
    for (k, amp) in fock.iter().enumerate() {
        let t = single.noble[k][0];
        assert!((amp - t * t).norm() < 1e-8, "t={}: {amp} vs {}", times[k], t * t);
        assert!((amp.norm_sqr() - t.norm_sqr().powi(2)).abs() < 1e-8);
    }
}

#[test]
fn peak_fidelity_matches_fock_space_maximum() {
    let sys = three_mode_system(25.0);
    let h = common::exchange_hamiltonian(&sys.alkali_decay, &sys.noble_decay, &sys.coupling, sys.j);
    let best = exchange_fidelity(&sys, None).unwrap();
    let f = |t: f64| common::fock_double_excitation(&h, &sys.alpha, 2, &[t])[0].norm_sqr();
    let (t_star, f_star) = common::golden_max(f, 0.5 * best.t_opt, 1.5 * best.t_opt, 1e-10);
    assert!((best.fidelity - f_star).abs() < 1e-8, "{} vs {f_star}", best.fidelity);
    assert!((best.t_opt - t_star).abs() < 1e-6);
}

#[test]
fn no_coupling_means_independent_decay() {
    let sys = ExchangeSystem::from_parts(vec![2.0, 5.0], vec![1.0], DMatrix::from_row_slice(2, 1, &[0.5, 0.5]), 0.0, vec![0.6, 0.3]).unwrap();
    let tr = transfer_amplitudes(&sys, &[0.0, 0.3, 1.0]).unwrap();
    for (t, a) in tr.times.iter().zip(&tr.alkali) {
        assert!((a[0].re - 0.6 * (-2.0 * t).exp()).abs() < 1e-14);
        assert!((a[1].re - 0.3 * (-5.0 * t).exp()).abs() < 1e-14);
    }
    assert!(tr.noble.iter().all(|b| b[0].norm() == 0.0));
    assert_eq!(exchange_fidelity(&sys, None).unwrap().fidelity, 0.0);
}

#[test]
fn truncation_50_to_70_changes_fidelity_little() {
    let small = fig4(50);
    let big = fig4(70);
    for n in [1.0, 1e3, 1e7] {
        for j in [10.0, 100.0, 1000.0] {
            let a = exchange_fidelity(&ExchangeSystem::new(&small.with_alkali_wall(WallQuality::Finite(n)), j).unwrap(), None).unwrap();
            let b = exchange_fidelity(&ExchangeSystem::new(&big.with_alkali_wall(WallQuality::Finite(n)), j).unwrap(), None).unwrap();
            assert!((a.fidelity - b.fidelity).abs() < 1e-3, "N={n} J={j}: {} vs {}", a.fidelity, b.fidelity);
        }
    }
}

#[test]
fn fidelity_map_is_monotone_and_high_for_strong_coupling() {
    let spec = fig4(40);
    let j = spinmodes::grid::logarithmic(0.1, 1000.0, 6).unwrap();
    let n = [1.0, 1e2, 1e4, 1e6, 1e7];
    let map = fidelity_map(&spec, &j, &n).unwrap();
    assert!(map.j_violations.is_empty() && map.n_violations.is_empty(), "{:?} {:?}", map.j_violations, map.n_violations);
    let gamma_wall = PI * PI * 0.35 / 0.25;
    let strong = 100.0 * gamma_wall.max(6.0);
    let f = exchange_fidelity(&ExchangeSystem::new(&spec.with_alkali_wall(WallQuality::Finite(1e7)), strong).unwrap(), None).unwrap();
    assert!(f.fidelity > 0.9, "{}", f.fidelity);
    // weak coupling with lossy walls transfers almost nothing
    assert!(map.fidelity[0][0] < 1e-3);
}

#[test]
fn fidelity_saturates_once_wall_is_good() {
    let spec = fig4(40);
    let f = |n: f64| exchange_fidelity(&ExchangeSystem::new(&spec.with_alkali_wall(WallQuality::Finite(n)), 300.0).unwrap(), None).unwrap().fidelity;
    let (a, b, c) = (f(1e5), f(1e6), f(1e7));
    assert!(b >= a && c >= b);
    assert!(c - b < 0.1 * (b - f(1e2)));
}

fn small_system() -> impl Strategy<Value = ExchangeSystem> {
    (1usize..4, 1usize..4).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(0.0f64..5.0, m),
            prop::collection::vec(0.0f64..5.0, n),
            prop::collection::vec(-1.0f64..1.0, m * n),
            0.0f64..50.0,
            prop::collection::vec(-1.0f64..1.0, m),
        )
            .prop_map(move |(ga, gb, c, j, alpha)| {
                ExchangeSystem::from_parts(ga, gb, DMatrix::from_row_slice(m, n, &c), j, alpha).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn excitation_never_grows(sys in small_system()) {
        let t: Vec<f64> = (0..80).map(|i| 0.01 * i as f64).collect();
        let norms = transfer_amplitudes(&sys, &t).unwrap().norms();
        prop_assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15));
    }

    #[test]
    fn lossless_exchange_conserves_excitation(mut sys in small_system()) {
        sys.alkali_decay.iter_mut().for_each(|g| *g = 0.0);
        sys.noble_decay.iter_mut().for_each(|g| *g = 0.0);
        let t: Vec<f64> = (0..80).map(|i| 0.01 * i as f64).collect();
        let norms = transfer_amplitudes(&sys, &t).unwrap().norms();
        for v in &norms {
            prop_assert!((v - norms[0]).abs() < 1e-9 * norms[0].max(1e-300));
        }
        let g = sys.generator();
        prop_assert!((&g + g.transpose()).abs().max() == 0.0);
    }
}
