//! Bessel functions, spherical Bessel functions and spherical harmonics.
//!
//! Cylindrical Bessel functions delegate to `libm`. Spherical Bessel
//! functions use a power series near the origin, upward recurrence when
//! `x > l` and Miller's downward recurrence otherwise.

use num_complex::Complex64;
use std::f64::consts::PI;

/// `J_n(x)`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    match n {
        0 => libm::j0(x),
        1 => libm::j1(x),
        _ => libm::jn(n as i32, x),
    }
}

/// `dJ_n/dx`.
pub fn bessel_j_prime(n: u32, x: f64) -> f64 {
    if n == 0 {
        -libm::j1(x)
    } else {
        0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
    }
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

fn spherical_j_series(l: u32, x: f64) -> f64 {
    // x^l / (2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)(2l+5)...(2l+2k+1))
    let mut lead = 1.0;
    for i in 1..=l {
        lead *= x / (2 * i + 1) as f64;
    }
    let h = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60u32 {
        term *= h / (k as f64 * (2 * l + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// Spherical Bessel function of the first kind `j_l(x)`.
pub fn spherical_j(l: u32, x: f64) -> f64 {
    if x < 0.0 {
        let v = spherical_j(l, -x);
        return if l % 2 == 0 { v } else { -v };
    }
    if x <= 1.0 {
        return spherical_j_series(l, x);
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if l == 0 {
        return j0;
    }
    let j1 = (s / x - c) / x;
    if l == 1 {
        return j1;
    }
    if x > l as f64 {
        let (mut prev, mut cur) = (j0, j1);
        for i in 1..l {
            let next = (2 * i + 1) as f64 / x * cur - prev;
            prev = cur;
            cur = next;
        }
        return cur;
    }
    // Miller: downward from well above l, normalized against j0 or j1.
    let start = l + x as u32 + 40;
    let mut above = 0.0f64;
    let mut cur = 1e-300f64;
    let mut at_l = 0.0;
    let mut f1 = 0.0;
    let mut f0 = 0.0;
    let mut i = start;
    while i > 0 {
        let next = (2 * i + 1) as f64 / x * cur - above;
        above = cur;
        cur = next;
        i -= 1;
        // cur now holds f_i
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            at_l *= 1e-250;
        }
        if i == l {
            at_l = cur;
        }
        if i == 1 {
            f1 = cur;
        }
        if i == 0 {
            f0 = cur;
        }
    }
    if j0.abs() >= j1.abs() {
        at_l * (j0 / f0)
    } else {
        at_l * (j1 / f1)
    }
}

/// `dj_l/dx`, written without division by `x`.
pub fn spherical_j_prime(l: u32, x: f64) -> f64 {
    if l == 0 {
        -spherical_j(1, x)
    } else {
        let lf = l as f64;
        (lf * spherical_j(l - 1, x) - (lf + 1.0) * spherical_j(l + 1, x)) / (2.0 * lf + 1.0)
    }
}

/// Orthonormal spherical harmonic `Y_l^m(theta, phi)` with the
/// Condon-Shortley phase.
pub fn spherical_harmonic(l: u32, m: i32, theta: f64, phi: f64) -> Complex64 {
    let am = m.unsigned_abs();
    if am > l {
        return Complex64::new(0.0, 0.0);
    }
    let p = normalized_legendre(l, am, theta.cos(), theta.sin());
    let y = Complex64::from_polar(p, am as f64 * phi);
    if m >= 0 {
        y
    } else if am % 2 == 0 {
        y.conj()
    } else {
        -y.conj()
    }
}

/// `sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(cos theta)`, Condon-Shortley phase included.
fn normalized_legendre(l: u32, m: u32, ct: f64, st: f64) -> f64 {
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for i in 1..=m {
        pmm *= -((2 * i + 1) as f64 / (2 * i) as f64).sqrt() * st;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = (2.0 * m as f64 + 3.0).sqrt() * ct * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut pm2 = pmm;
    let mf = m as f64;
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
        let p = a * (ct * pm1 - b * pm2);
        pm2 = pm1;
        pm1 = p;
    }
    pm1
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    // Reference values computed with 50-digit arithmetic.
    #[test]
    fn spherical_bessel_reference_values() {
        let cases = [
            (0u32, 0.3, 0.98506735553779858),
            (1, 0.3, 0.09910288804064188),
            (3, 0.3, 0.00025585976969508184),
            (2, 5.0, 0.13473121008512522),
            (5, 2.0, 0.0026351697702441173),
            (10, 3.0, 3.5260038931752563e-6),
            (4, 4.493409457909064, 0.15933411010214873),
            (20, 25.0, 0.028500071484154682),
            (7, 40.0, -0.024980609771953647),
            (30, 0.5, 5.2154726081997029e-52),
            (12, 11.5, 0.044669795003959387),
        ];
        for (l, x, want) in cases {
            let got = spherical_j(l, x);
            assert!(rel(got, want) < 1e-12, "j_{l}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn cylindrical_bessel_reference_values() {
        let cases = [
            (0u32, 2.404825557695773, 0.0),
            (1, 3.0, 0.33905895852593646),
            (3, 7.5, -0.25806091319346031),
            (10, 12.0, 0.30047603527126931),
            (25, 30.0, 0.084292740643031729),
        ];
        for (n, x, want) in cases {
            let got = bessel_j(n, x);
            if want == 0.0 {
                assert!(got.abs() < 1e-15);
            } else {
                assert!(rel(got, want) < 1e-12, "J_{n}({x}) = {got}, want {want}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for l in 0..6u32 {
            for &x in &[0.2, 1.7, 4.0, 9.3] {
                let h = 1e-5;
                let fd = (spherical_j(l, x + h) - spherical_j(l, x - h)) / (2.0 * h);
                assert!((fd - spherical_j_prime(l, x)).abs() < 1e-9);
                let fd = (bessel_j(l, x + h) - bessel_j(l, x - h)) / (2.0 * h);
                assert!((fd - bessel_j_prime(l, x)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spherical_branches_agree_at_switch_points() {
        for l in 2..12u32 {
            let x = l as f64;
            let below = spherical_j(l, x * (1.0 - 1e-12));
            let above = spherical_j(l, x * (1.0 + 1e-12));
            assert!(rel(below, above) < 1e-9, "l={l}");
        }
    }

    #[test]
    fn spherical_harmonic_reference_values() {
        let y = spherical_harmonic(2, 1, 0.7, 0.3);
        // -sqrt(15/(8 pi)) sin cos e^{i phi}
        let mag = -(15.0 / (8.0 * PI)).sqrt() * 0.7f64.sin() * 0.7f64.cos();
        assert!((y.re - mag * 0.3f64.cos()).abs() < 1e-14);
        assert!((y.im - mag * 0.3f64.sin()).abs() < 1e-14);
        let y = spherical_harmonic(3, -2, 1.1, -0.4);
        let m = (105.0 / (32.0 * PI)).sqrt() * 1.1f64.sin().powi(2) * 1.1f64.cos();
        assert!((y.re - m * (0.8f64).cos()).abs() < 1e-14);
        assert!((y.im - m * (0.8f64).sin()).abs() < 1e-14);
        let y = spherical_harmonic(0, 0, 0.2, 0.2);
        assert!((y.re - 0.5 / PI.sqrt()).abs() < 1e-15);
    }
}
