//! Sampling grids for frequencies, times and parameter sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A grid description as written in configuration files:
/// `lin:a:b:n`, `log:a:b:n`, `sym:center:min:max:n` or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Text(String),
    Values(Vec<f64>),
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        match self {
            Self::Values(v) => Ok(v.clone()),
            Self::Text(s) => parse(s),
        }
    }
}

pub fn linear(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if !(a.is_finite() && b.is_finite()) || n == 0 {
        return Err(invalid(format!("bad linear grid {a}..{b} with {n} points")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let h = (b - a) / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { b } else { a + h * i as f64 }).collect())
}

pub fn logarithmic(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid(format!("log grid bounds must be positive, got {a} and {b}")));
    }
    // base 10 keeps decade points exact
    let mut out: Vec<f64> = linear(a.log10(), b.log10(), n)?.into_iter().map(|x| 10f64.powf(x)).collect();
    out[0] = a;
    if n > 1 {
        out[n - 1] = b;
    }
    Ok(out)
}

/// Points at `center -+ d` for `n` log-spaced offsets `d` in `[min, max]`,
/// plus the center itself; `2n + 1` points in increasing order.
pub fn symmetric_log(center: f64, min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    let offsets = logarithmic(min, max, n)?;
    let mut out: Vec<f64> = offsets.iter().rev().map(|d| center - d).collect();
    out.push(center);
    out.extend(offsets.iter().map(|d| center + d));
    Ok(out)
}

fn parse(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let num = |s: &str| -> Result<f64> { s.parse::<f64>().map_err(|_| invalid(format!("bad number '{s}' in grid '{text}'"))) };
    let count = |s: &str| -> Result<usize> { s.parse::<usize>().map_err(|_| invalid(format!("bad count '{s}' in grid '{text}'"))) };
    match parts.as_slice() {
        ["lin", a, b, n] => linear(num(a)?, num(b)?, count(n)?),
        ["log", a, b, n] => logarithmic(num(a)?, num(b)?, count(n)?),
        ["sym", c, lo, hi, n] => symmetric_log(num(c)?, num(lo)?, num(hi)?, count(n)?),
        _ => text
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .unwrap_or(text)
            .split(',')
            .map(|s| num(s.trim()))
            .collect::<Result<Vec<_>>>()
            .map_err(|_| invalid(format!("unrecognized grid '{text}'"))),
    }
}
