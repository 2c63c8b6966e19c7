//! Bracketing root finders.

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign.
pub fn brent<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NonConvergence { lo: a, hi: b, reason: "bracket has no sign change".into() });
    }
    let (lo0, hi0) = (a.min(b), a.max(b));
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITERATIONS {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::NonConvergence { lo: lo0, hi: hi0, reason: format!("no convergence after {MAX_ITERATIONS} iterations") })
}

/// Sign-only bisection, used when one end of the bracket is a point where
/// `f` vanishes identically and only its one-sided sign is known.
pub fn bisect_signed<F: Fn(f64) -> f64>(f: F, mut a: f64, sign_a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let (lo0, hi0) = (a, b);
    for _ in 0..MAX_ITERATIONS {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol + 2.0 * f64::EPSILON * m.abs() || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == sign_a {
            a = m;
        } else {
            b = m;
        }
    }
    Err(Error::NonConvergence { lo: lo0, hi: hi0, reason: format!("no convergence after {MAX_ITERATIONS} iterations") })
}

/// Scans `(0, k_max]` in steps of `step` for the first `count` sign changes
/// of `f`, refining each bracket. `sign_at_zero` is the sign of `f` just
/// above zero.
pub fn scan_roots<F: Fn(f64) -> f64>(f: F, sign_at_zero: f64, step: f64, count: usize, k_max: f64) -> Result<Vec<f64>> {
    let mut roots = Vec::with_capacity(count);
    let mut prev_k = 0.0;
    let mut prev_sign = sign_at_zero;
    let mut i = 1u64;
    while roots.len() < count {
        let k = i as f64 * step;
        if k > k_max {
            return Err(Error::NonConvergence {
                lo: 0.0,
                hi: k_max,
                reason: format!("scan found {} of {count} roots", roots.len()),
            });
        }
        let v = f(k);
        let s = if v == 0.0 { -prev_sign } else { v.signum() };
        if s != prev_sign {
            let xtol = 4.0 * f64::EPSILON * k;
            let root = if v == 0.0 {
                k
            } else if prev_k == 0.0 {
                bisect_signed(&f, 0.0, prev_sign, k, xtol)?
            } else {
                brent(&f, prev_k, k, xtol)?
            };
            roots.push(root);
            if v == 0.0 {
                // step past the exact zero so its sign is not counted twice
                let nudge = f(k + 1e-9 * step);
                prev_sign = if nudge == 0.0 { -prev_sign } else { nudge.signum() };
            } else {
                prev_sign = s;
            }
        }
        prev_k = k;
        i += 1;
    }
    Ok(roots)
}
