//! Flat key/value run configuration with unit-suffixed keys.
//!
//! Values come from a TOML file (or the `config` object of a JSON run
//! manifest) and `--key value` overrides. Physical quantities carry their
//! unit in the key name and are converted to cm, s and Hz on access. Every
//! key must be consumed by the command that reads it; leftovers are
//! reported by name.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use crate::grid::GridSpec;
use crate::modes::{Axis, CellGeometry, WallGasSpec, WallQuality};

pub type Value = toml::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Missing(String),
    Unknown(String),
    Invalid { key: String, reason: String },
    Conflict(String, String),
    Io(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Missing(k) => write!(f, "missing required key '{k}'"),
            Self::Unknown(k) => write!(f, "unknown key '{k}'"),
            Self::Invalid { key, reason } => write!(f, "invalid value for '{key}': {reason}"),
            Self::Conflict(a, b) => write!(f, "keys '{a}' and '{b}' give the same quantity; keep one"),
            Self::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

/// Scale factors to the internal unit for each suffix family.
const LENGTH_UNITS: &[(&str, f64)] = &[("cm", 1.0), ("mm", 0.1), ("um", 1e-4), ("nm", 1e-7), ("m", 100.0)];
const TIME_UNITS: &[(&str, f64)] = &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6)];
const RATE_UNITS: &[(&str, f64)] = &[("per_s", 1.0), ("per_ms", 1e3)];
const FREQUENCY_UNITS: &[(&str, f64)] = &[("hz", 1.0), ("khz", 1e3)];
const DIFFUSION_UNITS: &[(&str, f64)] = &[("cm2_per_s", 1.0), ("m2_per_s", 1e4)];

/// Parses a command-line value: integer, float, boolean, otherwise string.
pub fn parse_scalar(text: &str) -> Value {
    if let Ok(i) = text.parse::<i64>() {
        return Value::Integer(i);
    }
    if let Ok(x) = text.parse::<f64>() {
        if x.is_finite() {
            return Value::Float(x);
        }
    }
    match text {
        "true" => Value::Boolean(true),
        "false" => Value::Boolean(false),
        _ => Value::String(text.to_string()),
    }
}

/// Merged configuration with consumption tracking.
#[derive(Debug, Clone, Default)]
pub struct Params {
    entries: BTreeMap<String, Value>,
    used: RefCell<BTreeSet<String>>,
}

impl Params {
    pub fn new(entries: BTreeMap<String, Value>) -> Self {
        Self { entries, used: RefCell::new(BTreeSet::new()) }
    }

    /// Reads a TOML config, or the `config` table of a JSON manifest.
    pub fn from_file(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        let entries: BTreeMap<String, Value> = if is_json {
            #[derive(serde::Deserialize)]
            struct Manifest {
                config: BTreeMap<String, Value>,
            }
            serde_json::from_str::<Manifest>(&text)
                .map_err(|e| ConfigError::Io(format!("cannot parse manifest {}: {e}", path.display())))?
                .config
        } else {
            toml::from_str(&text).map_err(|e| ConfigError::Io(format!("cannot parse {}: {e}", path.display())))?
        };
        for (k, v) in &entries {
            if matches!(v, Value::Table(_)) {
                return Err(invalid(k, "nested tables are not supported; keys are flat"));
            }
        }
        Ok(Self::new(entries))
    }

    /// Applies `--key value` / `--key=value` pairs.
    pub fn apply_overrides(&mut self, args: &[String]) -> ConfigResult<()> {
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let Some(key) = arg.strip_prefix("--") else {
                return Err(ConfigError::Io(format!("expected --key value, got '{arg}'")));
            };
            let (key, value) = match key.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it.next().ok_or_else(|| invalid(key, "no value given"))?;
                    (key.to_string(), v.clone())
                }
            };
            self.entries.insert(key, parse_scalar(&value));
        }
        Ok(())
    }

    pub fn entries(&self) -> &BTreeMap<String, Value> {
        &self.entries
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn take(&self, key: &str) -> Option<&Value> {
        let v = self.entries.get(key);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    /// Marks a key as understood without reading it.
    pub fn accept(&self, key: &str) {
        self.take(key);
    }

    /// Errors on the first key no accessor has read.
    pub fn finish(&self) -> ConfigResult<()> {
        let used = self.used.borrow();
        match self.entries.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(ConfigError::Unknown(k.clone())),
            None => Ok(()),
        }
    }

    pub fn opt_f64(&self, key: &str) -> ConfigResult<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(Value::String(s)) => s.parse::<f64>().map(Some).map_err(|_| invalid(key, format!("'{s}' is not a number"))),
            Some(v) => Err(invalid(key, format!("expected a number, got {v}"))),
        }
    }

    pub fn f64(&self, key: &str) -> ConfigResult<f64> {
        self.opt_f64(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }

    pub fn opt_usize(&self, key: &str) -> ConfigResult<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(Value::Float(x)) if *x >= 0.0 && x.fract() == 0.0 && *x < 9e15 => Ok(Some(*x as usize)),
            Some(v) => Err(invalid(key, format!("expected a non-negative integer, got {v}"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> ConfigResult<usize> {
        Ok(self.opt_usize(key)?.unwrap_or(default))
    }

    pub fn opt_str(&self, key: &str) -> ConfigResult<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(invalid(key, format!("expected a string, got {v}"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> ConfigResult<bool> {
        match self.take(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(invalid(key, format!("expected true or false, got {v}"))),
        }
    }

    /// Reads `base_<unit>` for exactly one unit of the family.
    fn opt_unit(&self, base: &str, units: &[(&str, f64)]) -> ConfigResult<Option<(String, f64)>> {
        let mut found: Option<(String, f64)> = None;
        for (suffix, scale) in units {
            let key = format!("{base}_{suffix}");
            if self.contains(&key) {
                if let Some((prev, _)) = &found {
                    return Err(ConfigError::Conflict(prev.clone(), key));
                }
                let v = self.f64(&key)?;
                found = Some((key, v * scale));
            }
        }
        Ok(found)
    }

    fn unit(&self, base: &str, units: &[(&str, f64)]) -> ConfigResult<(String, f64)> {
        self.opt_unit(base, units)?.ok_or_else(|| ConfigError::Missing(format!("{base}_{}", units[0].0)))
    }

    /// Length in cm from `base_cm`, `base_mm`, `base_um`, ...
    pub fn length(&self, base: &str) -> ConfigResult<f64> {
        let (key, v) = self.unit(base, LENGTH_UNITS)?;
        positive(&key, v)
    }

    pub fn opt_length(&self, base: &str) -> ConfigResult<Option<f64>> {
        self.opt_unit(base, LENGTH_UNITS)?.map(|(k, v)| positive(&k, v)).transpose()
    }

    pub fn time(&self, base: &str) -> ConfigResult<f64> {
        Ok(self.unit(base, TIME_UNITS)?.1)
    }

    pub fn opt_time(&self, base: &str) -> ConfigResult<Option<f64>> {
        Ok(self.opt_unit(base, TIME_UNITS)?.map(|x| x.1))
    }

    pub fn rate(&self, base: &str) -> ConfigResult<f64> {
        Ok(self.unit(base, RATE_UNITS)?.1)
    }

    pub fn opt_rate(&self, base: &str) -> ConfigResult<Option<f64>> {
        Ok(self.opt_unit(base, RATE_UNITS)?.map(|x| x.1))
    }

    pub fn frequency(&self, base: &str) -> ConfigResult<f64> {
        Ok(self.unit(base, FREQUENCY_UNITS)?.1)
    }

    pub fn diffusion(&self, base: &str) -> ConfigResult<f64> {
        let (key, v) = self.unit(base, DIFFUSION_UNITS)?;
        positive(&key, v)
    }

    fn grid_raw(&self, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        let spec = match self.take(key) {
            None => return Ok(None),
            Some(Value::String(s)) => GridSpec::Text(s.clone()),
            Some(Value::Array(a)) => GridSpec::Values(
                a.iter()
                    .map(|v| match v {
                        Value::Float(x) => Ok(*x),
                        Value::Integer(i) => Ok(*i as f64),
                        _ => Err(invalid(key, "grid arrays must hold numbers")),
                    })
                    .collect::<ConfigResult<_>>()?,
            ),
            Some(Value::Float(x)) => GridSpec::Values(vec![*x]),
            Some(Value::Integer(i)) => GridSpec::Values(vec![*i as f64]),
            Some(v) => return Err(invalid(key, format!("expected a grid, got {v}"))),
        };
        spec.points().map(Some).map_err(|e| invalid(key, e.to_string()))
    }

    /// Grid under `base_<unit>` scaled to internal units.
    fn opt_unit_grid(&self, base: &str, units: &[(&str, f64)]) -> ConfigResult<Option<(String, Vec<f64>)>> {
        let mut found: Option<(String, Vec<f64>)> = None;
        for (suffix, scale) in units {
            let key = format!("{base}_{suffix}");
            if self.contains(&key) {
                if let Some((prev, _)) = &found {
                    return Err(ConfigError::Conflict(prev.clone(), key));
                }
                let g = self.grid_raw(&key)?.unwrap_or_default();
                found = Some((key, g.into_iter().map(|x| x * scale).collect()));
            }
        }
        Ok(found)
    }

    pub fn opt_length_grid(&self, base: &str) -> ConfigResult<Option<Vec<f64>>> {
        Ok(self.opt_unit_grid(base, LENGTH_UNITS)?.map(|x| x.1))
    }

    pub fn opt_time_grid(&self, base: &str) -> ConfigResult<Option<(String, Vec<f64>)>> {
        self.opt_unit_grid(base, TIME_UNITS)
    }

    pub fn opt_frequency_grid(&self, base: &str) -> ConfigResult<Option<Vec<f64>>> {
        Ok(self.opt_unit_grid(base, FREQUENCY_UNITS)?.map(|x| x.1))
    }

    pub fn rate_grid(&self, base: &str) -> ConfigResult<Vec<f64>> {
        self.opt_unit_grid(base, RATE_UNITS)?
            .map(|x| x.1)
            .ok_or_else(|| ConfigError::Missing(format!("{base}_per_s")))
    }

    /// Unitless grid.
    pub fn grid(&self, key: &str) -> ConfigResult<Vec<f64>> {
        self.grid_raw(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }

    pub fn opt_grid(&self, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        self.grid_raw(key)
    }

    /// `N`: a positive number, `inf` or `dirichlet`.
    pub fn wall_quality(&self, key: &str) -> ConfigResult<WallQuality> {
        match self.take(key) {
            None => Err(ConfigError::Missing(key.into())),
            Some(Value::String(s)) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => Ok(WallQuality::Preserving),
                "dirichlet" => Ok(WallQuality::Depolarizing),
                other => other
                    .parse::<f64>()
                    .map_err(|_| invalid(key, format!("'{s}' is not a number, 'inf' or 'dirichlet'")))
                    .and_then(|n| WallQuality::from_collisions(n).map_err(|e| invalid(key, e.to_string()))),
            },
            Some(Value::Float(x)) => WallQuality::from_collisions(*x).map_err(|e| invalid(key, e.to_string())),
            Some(Value::Integer(i)) => WallQuality::from_collisions(*i as f64).map_err(|e| invalid(key, e.to_string())),
            Some(v) => Err(invalid(key, format!("expected a number, 'inf' or 'dirichlet', got {v}"))),
        }
    }

    /// Cell from `shape` and its dimensions.
    pub fn geometry(&self) -> ConfigResult<CellGeometry> {
        let shape = self.opt_str("shape")?.ok_or_else(|| ConfigError::Missing("shape".into()))?;
        let g = match shape.as_str() {
            "slab1d" => CellGeometry::slab(self.length("L")?),
            "rectangular" => CellGeometry::rectangular(self.length("Lx")?, self.length("Ly")?, self.length("Lz")?),
            "cylindrical" => CellGeometry::cylinder(self.length("R")?, self.length("L")?),
            "spherical" => CellGeometry::sphere(self.length("R")?),
            other => {
                return Err(invalid(
                    "shape",
                    format!("'{other}' is not one of slab1d, rectangular, cylindrical, spherical"),
                ))
            }
        };
        g.map_err(|e| invalid("shape", e.to_string()))
    }

    /// Gas and wall from `D<sfx>`, `lambda<sfx>` and `N<sfx>`, where the
    /// suffix distinguishes species (e.g. `_a`). The mean free path is only
    /// required for a finite `N`.
    pub fn gas(&self, sfx: &str) -> ConfigResult<WallGasSpec> {
        let d = self.diffusion(&format!("D{sfx}"))?;
        let wall = self.wall_quality(&format!("N{sfx}"))?;
        self.gas_with_wall(sfx, d, wall)
    }

    pub fn gas_with_wall(&self, sfx: &str, d: f64, wall: WallQuality) -> ConfigResult<WallGasSpec> {
        let lam_key = format!("lambda{sfx}");
        let lam = match (self.opt_length(&lam_key)?, wall) {
            (Some(l), _) => l,
            (None, WallQuality::Finite(_)) => return Err(ConfigError::Missing(format!("{lam_key}_um"))),
            // unused by the symbolic limits
            (None, _) => 1e-5,
        };
        WallGasSpec::new(d, lam, wall).map_err(|e| invalid(&format!("D{sfx}_cm2_per_s"), e.to_string()))
    }

    pub fn axis(&self, key: &str, default: Axis) -> ConfigResult<Axis> {
        match self.opt_str(key)?.as_deref() {
            None => Ok(default),
            Some("x") | Some("X") => Ok(Axis::X),
            Some("y") | Some("Y") => Ok(Axis::Y),
            Some("z") | Some("Z") => Ok(Axis::Z),
            Some(other) => Err(invalid(key, format!("'{other}' is not x, y or z"))),
        }
    }
}

fn positive(key: &str, v: f64) -> ConfigResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be > 0, got {v}")))
    }
}
