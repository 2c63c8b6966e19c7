//! Dormand-Prince 5(4) integrator with adaptive step control.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-13, max_steps: 5_000_000, initial_step: None }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` and returns the state at each output time
/// (which must be `>= t0` and non-decreasing).
pub fn dopri5<F>(f: F, t0: f64, y0: &[f64], outputs: &[f64], opts: Dopri5Options) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    f(t, &y, &mut k[0]);
    let span = outputs.last().map_or(0.0, |&e| e - t0);
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let norm = k[0].iter().map(|v| v.abs()).fold(0.0, f64::max);
        let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(opts.atol / opts.rtol);
        (0.01 * scale / norm.max(1e-300)).min(span.max(1e-12))
    });
    let mut out = Vec::with_capacity(outputs.len());
    let mut steps = 0usize;
    for &target in outputs {
        if target < t {
            return Err(Error::InvalidParameter("output times must be non-decreasing".into()));
        }
        while t < target {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StiffnessFailure(format!("step budget of {} exhausted at t = {t}", opts.max_steps)));
            }
            let last = t + h >= target;
            let hh = if last { target - t } else { h };
            if hh <= 1e-15 * t.abs().max(1.0) && !last {
                return Err(Error::StiffnessFailure(format!("step size underflow at t = {t}")));
            }
            let stage = |out: &mut [f64], coeffs: &[(f64, usize)], y: &[f64], k: &Vec<Vec<f64>>| {
                for i in 0..n {
                    let mut acc = y[i];
                    for &(a, j) in coeffs {
                        acc += hh * a * k[j][i];
                    }
                    out[i] = acc;
                }
            };
            stage(&mut tmp, &[(A21, 0)], &y, &k);
            f(t + C2 * hh, &tmp, &mut k[1]);
            stage(&mut tmp, &[(A31, 0), (A32, 1)], &y, &k);
            f(t + C3 * hh, &tmp, &mut k[2]);
            stage(&mut tmp, &[(A41, 0), (A42, 1), (A43, 2)], &y, &k);
            f(t + C4 * hh, &tmp, &mut k[3]);
            stage(&mut tmp, &[(A51, 0), (A52, 1), (A53, 2), (A54, 3)], &y, &k);
            f(t + C5 * hh, &tmp, &mut k[4]);
            stage(&mut tmp, &[(A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4)], &y, &k);
            f(t + hh, &tmp, &mut k[5]);
            stage(&mut y_new, &[(B1, 0), (B3, 2), (B4, 3), (B5, 4), (B6, 5)], &y, &k);
            f(t + hh, &y_new, &mut k[6]);
            let mut err = 0.0f64;
            for i in 0..n {
                let e = hh * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            if err <= 1.0 {
                t = if last { target } else { t + hh };
                std::mem::swap(&mut y, &mut y_new);
                let (first, rest) = k.split_at_mut(6);
                first[0].copy_from_slice(&rest[0]);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !(last && err <= 1.0) {
                h = hh * factor;
            }
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::StiffnessFailure(format!("invalid step size at t = {t}")));
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
