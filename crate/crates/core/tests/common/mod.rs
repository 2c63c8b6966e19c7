//! Independent reference computations shared by the integration tests and
//! the acceptance harness. Nothing here calls into the library's solvers.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Robin length `h` of a one-dimensional slab: `2 lambda (1 + e^{-1/N}) / (1 - e^{-1/N})`.
pub fn slab_robin_length(lambda: f64, n: f64) -> f64 {
    let q = (-1.0 / n).exp();
    2.0 * lambda * (1.0 + q) / (1.0 - q)
}

/// Roots of `cot(kL/2) = h k` (even) or `-tan(kL/2) = h k` (odd), written as
/// sign-regular products so that the poles of cot and tan never appear. Found
/// by a dense sign scan with step `pi / (100 L)` and bisection to adjacent doubles.
pub fn slab_roots_dense_scan(length: f64, h: f64, even: bool, count: usize) -> Vec<f64> {
    let g = |k: f64| {
        let x = 0.5 * k * length;
        if even {
            x.cos() - h * k * x.sin()
        } else {
            x.sin() + h * k * x.cos()
        }
    };
    let step = std::f64::consts::PI / (100.0 * length);
    let mut roots = Vec::with_capacity(count);
    let mut a = 0.5 * step;
    let mut ga = g(a);
    while roots.len() < count {
        let b = a + step;
        let gb = g(b);
        if ga == 0.0 {
            roots.push(a);
        } else if ga.signum() != gb.signum() {
            let (mut lo, mut hi, mut glo) = (a, b, ga);
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let gm = g(mid);
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            roots.push(if g(lo).abs() <= g(hi).abs() { lo } else { hi });
        }
        a = b;
        ga = gb;
    }
    roots
}

/// Occupation-number basis of `modes` bosonic modes holding exactly two quanta.
pub fn two_quanta_basis(modes: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for i in 0..modes {
        for j in i..modes {
            let mut n = vec![0; modes];
            n[i] += 1;
            n[j] += 1;
            out.push(n);
        }
    }
    out
}

/// Evolves `(sum_i alpha_i c_i^dag)^2 / sqrt 2 |0>` under the quadratic
/// Hamiltonian `H = sum_ij h_ij c_i^dag c_j`, with `i d/dt psi = H psi`, and
/// returns the amplitude of `|2>` in mode `target` at each time. Modes past
/// the end of `alpha` start empty.
pub fn fock_double_excitation(h: &DMatrix<Complex64>, alpha: &[f64], target: usize, times: &[f64]) -> Vec<Complex64> {
    let modes = h.nrows();
    let mut alpha = alpha.to_vec();
    alpha.resize(modes, 0.0);
    let basis = two_quanta_basis(modes);
    let index = |n: &[usize]| basis.iter().position(|b| b.as_slice() == n).expect("two-quanta state");
    let dim = basis.len();
    let mut big = DMatrix::<Complex64>::zeros(dim, dim);
    for (col, n) in basis.iter().enumerate() {
        for i in 0..modes {
            for j in 0..modes {
                if n[j] == 0 || h[(i, j)] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut m = n.clone();
                let mut amp = (m[j] as f64).sqrt();
                m[j] -= 1;
                amp *= ((m[i] + 1) as f64).sqrt();
                m[i] += 1;
                big[(index(&m), col)] += h[(i, j)] * amp;
            }
        }
    }
    let mut psi0 = DVector::<Complex64>::zeros(dim);
    for (k, n) in basis.iter().enumerate() {
        let occupied: Vec<usize> = (0..modes).filter(|&i| n[i] > 0).collect();
        psi0[k] = Complex64::new(
            match occupied.as_slice() {
                [i] => alpha[*i] * alpha[*i],
                [i, j] => std::f64::consts::SQRT_2 * alpha[*i] * alpha[*j],
                _ => unreachable!(),
            },
            0.0,
        );
    }
    let mut target_state = vec![0; modes];
    target_state[target] = 2;
    let t_idx = index(&target_state);
    let minus_i = Complex64::new(0.0, -1.0);
    times
        .iter()
        .map(|&t| {
            let u = (&big * (minus_i * t)).exp();
            (u * &psi0)[t_idx]
        })
        .collect()
}

/// Non-Hermitian single-particle Hamiltonian for alkali modes `a` and noble
/// modes `b`: diagonal `-i Gamma`, off-diagonal `J c_mn`.
pub fn exchange_hamiltonian(alkali_decay: &[f64], noble_decay: &[f64], c: &DMatrix<f64>, j: f64) -> DMatrix<Complex64> {
    let m = alkali_decay.len();
    let n = noble_decay.len();
    let mut h = DMatrix::<Complex64>::zeros(m + n, m + n);
    for (i, g) in alkali_decay.iter().enumerate() {
        h[(i, i)] = Complex64::new(0.0, -g);
    }
    for (i, g) in noble_decay.iter().enumerate() {
        h[(m + i, m + i)] = Complex64::new(0.0, -g);
    }
    for a in 0..m {
        for b in 0..n {
            let v = Complex64::new(j * c[(a, b)], 0.0);
            h[(a, m + b)] = v;
            h[(m + b, a)] = v;
        }
    }
    h
}

/// Golden-section maximum of a unimodal function on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Trapezoid rule on an arbitrary grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}
