//! Command-line front end. Each subcommand parses a flat configuration into a
//! typed plan, runs it, and writes CSV tables plus a `manifest.json` that can
//! be fed back with `--config` to reproduce the tables byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{ConfigError, Params, Value};
use crate::dynamics::{
    beam_reference_rate, full_width_half_max, lorentzian_spectrum, noise_content, spin_noise_spectrum, squeezing_db,
    squeezing_from_weights, FieldSpec, ModeWeights, SpinStatistics,
};
use crate::error::Error;
use crate::exchange::{fidelity_map, ExchangeSpec, SpeciesSpec};
use crate::grid::symmetric_log;
use crate::modes::{build_basis, Axis, CellGeometry, ModeBasis, Truncation, WallGasSpec};
use crate::oracle::{empirical_spectrum, matched_dt, mode_decay_check, msd_check, shape_ratio, SimConfig, WallRule};
use crate::overlaps::ProbeProfile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "spinmodes", version, about = "Diffusion-mode spin dynamics in vapor cells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Table of eigenmodes (labels, k, decay rate, amplitude)
    Modes(RunArgs),
    /// Spin-noise spectrum for a Gaussian probe, or noise content vs waist
    Spectrum(RunArgs),
    /// Decay of an initially squeezed probe quadrature
    Squeezing(RunArgs),
    /// Alkali/noble-gas excitation-exchange fidelity map
    Exchange(RunArgs),
    /// Monte-Carlo random-walk cross-checks
    Oracle(RunArgs),
    /// Parse and check a configuration without running it
    Validate(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config or a previous run's manifest.json
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (defaults to all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Config overrides as `--key value`
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
    overrides: Vec<String>,
}

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numeric(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Numeric(_) => EXIT_NUMERIC,
            Self::Config(_) | Self::Io(_) => EXIT_CONFIG,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(e) => write!(f, "config error: {e}"),
            Self::Numeric(e) => write!(f, "numerical failure: {e}"),
            Self::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            // problems with the inputs rather than the numerics
            Error::InvalidParameter(_)
            | Error::InvalidSymmetry(_)
            | Error::GeometryMismatch
            | Error::AxisMismatch(_)
            | Error::UnsupportedFormat(_) => Self::Config(ConfigError::Io(e.to_string())),
            other => Self::Numeric(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(args: &RunArgs) -> CliResult<Params> {
    let mut p = match &args.config {
        Some(path) => Params::from_file(path)?,
        None => Params::default(),
    };
    p.apply_overrides(&args.overrides)?;
    Ok(p)
}

/// Moves `--config`, `--out` and `--threads` that appear among the
/// trailing overrides back into their fields.
fn extract_reserved(args: &mut RunArgs) -> CliResult<()> {
    let mut rest = Vec::new();
    let mut it = std::mem::take(&mut args.overrides).into_iter();
    while let Some(a) = it.next() {
        let (key, inline) = match a.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (a.clone(), None),
        };
        if !matches!(key.as_str(), "--config" | "--out" | "--threads") {
            rest.push(a);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().ok_or_else(|| CliError::Io(format!("{key} needs a value")))?,
        };
        match key.as_str() {
            "--config" => args.config = Some(PathBuf::from(value)),
            "--out" => args.out = PathBuf::from(value),
            _ => {
                let n = value.parse().map_err(|_| CliError::Io(format!("--threads expects an integer, got '{value}'")))?;
                args.threads = Some(n);
            }
        }
    }
    args.overrides = rest;
    Ok(())
}

fn dispatch(command: Command) -> CliResult<()> {
    let (name, mut args) = match command {
        Command::Modes(a) => ("modes", a),
        Command::Spectrum(a) => ("spectrum", a),
        Command::Squeezing(a) => ("squeezing", a),
        Command::Exchange(a) => ("exchange", a),
        Command::Oracle(a) => ("oracle", a),
        Command::Validate(a) => ("validate", a),
    };
    extract_reserved(&mut args)?;
    let args = &args;
    if let Some(n) = args.threads {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let params = load(args)?;
    let target = match (name, params.opt_str("command")?) {
        ("validate", Some(c)) => c,
        ("validate", None) => return Err(ConfigError::Missing("command".into()).into()),
        (n, Some(c)) if c != n => {
            return Err(ConfigError::Invalid { key: "command".into(), reason: format!("config is for '{c}', not '{n}'") }.into())
        }
        (n, _) => n.to_string(),
    };
    let plan = Plan::parse(&target, &params)?;
    params.finish()?;
    let warnings = plan.warnings();
    for w in &warnings {
        log::warn!("{w}");
        eprintln!("warning: {w}");
    }
    if name == "validate" {
        println!("ok: {target} configuration is valid");
        return Ok(());
    }
    let start = Instant::now();
    fs::create_dir_all(&args.out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", args.out.display())))?;
    let report = plan.execute(&args.out)?;
    let mut config: BTreeMap<String, Value> = params.entries().clone();
    config.insert("command".into(), Value::String(target.clone()));
    let manifest = json!({
        "command": target,
        "config": config,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "wall_clock_s": start.elapsed().as_secs_f64(),
        "threads": rayon::current_num_threads(),
        "outputs": report.outputs,
        "warnings": warnings,
        "summary": report.summary,
    });
    write_file(&args.out.join("manifest.json"), &serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    for line in &report.lines {
        println!("{line}");
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

#[derive(Debug, Default)]
struct Report {
    outputs: Vec<String>,
    summary: serde_json::Value,
    lines: Vec<String>,
}

impl Report {
    fn table(&mut self, dir: &Path, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(dir.join(name), bytes).map_err(|e| CliError::Io(format!("cannot write {name}: {e}")))?;
        self.outputs.push(name.to_string());
        Ok(())
    }
}

/// Truncation keys shared by the mode-based commands.
fn truncation(p: &Params, default_count: usize, default_even: bool) -> CliResult<Truncation> {
    let count = match (p.opt_usize("count")?, p.opt_f64("epsilon")?) {
        (Some(_), Some(_)) => return Err(ConfigError::Conflict("count".into(), "epsilon".into()).into()),
        (Some(c), None) => c,
        (None, Some(e)) => Truncation::from_epsilon(e)?.per_class,
        (None, None) => default_count,
    };
    let axial = p.usize_or("axial_count", count)?;
    let order = p.usize_or("max_order", 0)?;
    let even = p.bool_or("even_only", default_even)?;
    Ok(Truncation::new(count).with_axial(axial).with_max_order(order as u32).even_only(even))
}

fn probe_axis(p: &Params, g: &CellGeometry) -> CliResult<Axis> {
    let default = if g.is_one_dimensional() { Axis::Y } else { Axis::Z };
    Ok(p.axis("probe_axis", default)?)
}

#[derive(Debug)]
enum Plan {
    Modes { geometry: CellGeometry, gas: WallGasSpec, truncation: Truncation },
    Spectrum(SpectrumPlan),
    Squeezing(SqueezingPlan),
    Exchange { spec: ExchangeSpec, j_grid: Vec<f64>, n_grid: Vec<f64> },
    Oracle(OraclePlan),
}

#[derive(Debug)]
struct SpectrumPlan {
    geometry: CellGeometry,
    gas: WallGasSpec,
    truncation: Truncation,
    field: FieldSpec,
    stats: SpinStatistics,
    axis: Axis,
    waists: Vec<f64>,
    sweep: bool,
    fgrid: Option<Vec<f64>>,
}

#[derive(Debug)]
enum SqueezeWeights {
    Probe { waists: Vec<f64>, axis: Axis, truncation: Truncation },
    RadialUniform { modes: usize },
}

#[derive(Debug)]
struct SqueezingPlan {
    geometry: CellGeometry,
    gas: WallGasSpec,
    weights: SqueezeWeights,
    x2_0: f64,
    times: Vec<f64>,
}

#[derive(Debug)]
enum OracleMode {
    Decay { mode_index: usize, count: usize },
    Spectrum { count: usize, smoothing: usize },
    Msd { steps: usize },
}

#[derive(Debug)]
struct OraclePlan {
    config: SimConfig,
    mode: OracleMode,
}

impl Plan {
    fn parse(command: &str, p: &Params) -> CliResult<Self> {
        match command {
            "modes" => {
                let geometry = p.geometry()?;
                let gas = p.gas("")?;
                let count = p.opt_usize("count")?.ok_or_else(|| ConfigError::Missing("count".into()))?;
                let axial = p.usize_or("axial_count", count)?;
                let order = p.usize_or("max_order", 0)?;
                let even = p.bool_or("even_only", false)?;
                let truncation = Truncation::new(count).with_axial(axial).with_max_order(order as u32).even_only(even);
                Ok(Plan::Modes { geometry, gas, truncation })
            }
            "spectrum" => {
                let geometry = p.geometry()?;
                let gas = p.gas("")?;
                let truncation = truncation(p, 200, true)?;
                let field = FieldSpec::new(p.frequency("f0")?)?;
                let stats = match p.opt_str("stats")?.as_deref() {
                    None | Some("polarized") => SpinStatistics::Polarized,
                    Some("unpolarized") => SpinStatistics::Unpolarized { spin: p.f64("spin")? },
                    Some(other) => {
                        return Err(ConfigError::Invalid { key: "stats".into(), reason: format!("'{other}' is not polarized or unpolarized") }.into())
                    }
                };
                let axis = probe_axis(p, &geometry)?;
                let (waists, sweep) = match (p.opt_length("w0")?, p.opt_length_grid("w0_grid")?) {
                    (Some(w), None) => (vec![w], false),
                    (None, Some(g)) => (g, true),
                    (Some(_), Some(_)) => return Err(ConfigError::Conflict("w0_mm".into(), "w0_grid_mm".into()).into()),
                    (None, None) => return Err(ConfigError::Missing("w0_mm".into()).into()),
                };
                for &w in &waists {
                    ProbeProfile::gaussian(w, axis)?;
                }
                let fgrid = p.opt_frequency_grid("f_grid")?;
                Ok(Plan::Spectrum(SpectrumPlan { geometry, gas, truncation, field, stats, axis, waists, sweep, fgrid }))
            }
            "squeezing" => {
                let geometry = p.geometry()?;
                let gas = p.gas("")?;
                let x2_0 = match (p.opt_f64("x2_0")?, p.opt_f64("squeezing_db")?) {
                    (Some(x), None) => x,
                    (None, Some(db)) => 0.25 * 10f64.powf(-db / 10.0),
                    (Some(_), Some(_)) => return Err(ConfigError::Conflict("x2_0".into(), "squeezing_db".into()).into()),
                    (None, None) => return Err(ConfigError::Missing("x2_0".into()).into()),
                };
                if !(x2_0 > 0.0) {
                    return Err(ConfigError::Invalid { key: "x2_0".into(), reason: "must be > 0".into() }.into());
                }
                let weights = match p.opt_str("weights")?.as_deref() {
                    None | Some("probe") => {
                        let axis = probe_axis(p, &geometry)?;
                        let waists = match (p.opt_length("w0")?, p.opt_length_grid("w0_grid")?) {
                            (Some(w), None) => vec![w],
                            (None, Some(g)) => g,
                            (Some(_), Some(_)) => return Err(ConfigError::Conflict("w0_mm".into(), "w0_grid_mm".into()).into()),
                            (None, None) => return Err(ConfigError::Missing("w0_mm".into()).into()),
                        };
                        SqueezeWeights::Probe { waists, axis, truncation: truncation(p, 200, true)? }
                    }
                    Some("radial_uniform") => SqueezeWeights::RadialUniform { modes: p.usize_or("radial_modes", 1000)? },
                    Some(other) => {
                        return Err(ConfigError::Invalid { key: "weights".into(), reason: format!("'{other}' is not probe or radial_uniform") }.into())
                    }
                };
                let times = match (p.opt_time_grid("t_grid")?, p.opt_grid("t_grid_Tw")?) {
                    (Some((_, t)), None) => t,
                    (None, Some(t)) => {
                        let r = match geometry {
                            CellGeometry::Cylindrical { radius, .. } | CellGeometry::Spherical { radius } => radius,
                            _ => 0.5 * geometry.min_dimension(),
                        };
                        let tw = r * r / (std::f64::consts::PI.powi(2) * gas.diffusion);
                        t.into_iter().map(|x| x * tw).collect()
                    }
                    (Some((k, _)), Some(_)) => return Err(ConfigError::Conflict(k, "t_grid_Tw".into()).into()),
                    (None, None) => return Err(ConfigError::Missing("t_grid_s".into()).into()),
                };
                Ok(Plan::Squeezing(SqueezingPlan { geometry, gas, weights, x2_0, times }))
            }
            "exchange" => {
                let radius = p.length("R")?;
                let d_a = p.diffusion("D_a")?;
                let lam_a = p.length("lambda_a")?;
                let gamma_a = p.rate("gamma_a")?;
                let d_b = p.diffusion("D_b")?;
                let lam_b = p.opt_length("lambda_b")?.unwrap_or(1e-5);
                let alkali_modes = p.usize_or("alkali_modes", 70)?;
                let noble_modes = p.usize_or("noble_modes", 70)?;
                let j_grid = p.rate_grid("J_grid")?;
                let n_grid = p.grid("N_grid")?;
                let alkali = SpeciesSpec::alkali(d_a, lam_a, crate::modes::WallQuality::Depolarizing, gamma_a)?;
                let noble = SpeciesSpec::noble_gas(d_b, lam_b)?;
                let spec = ExchangeSpec { radius, alkali, noble, alkali_modes, noble_modes };
                spec.validate()?;
                Ok(Plan::Exchange { spec, j_grid, n_grid })
            }
            "oracle" => {
                let mode_name = p.opt_str("mode")?.ok_or_else(|| ConfigError::Missing("mode".into()))?;
                let seed = p.usize_or("seed", 0)? as u64;
                if mode_name == "msd" {
                    let d = p.diffusion("D")?;
                    let dt = p.time("dt")?;
                    let steps = p.opt_usize("steps")?.ok_or_else(|| ConfigError::Missing("steps".into()))?;
                    let particles = p.usize_or("particles", 100_000)?;
                    let geometry = CellGeometry::sphere(1.0)?;
                    let gas = WallGasSpec::new(d, 1e-5, crate::modes::WallQuality::Preserving)?;
                    let mut config = SimConfig::new(geometry, gas, FieldSpec::new(0.0)?, dt);
                    config.n_particles = particles;
                    config.seed = seed;
                    return Ok(Plan::Oracle(OraclePlan { config, mode: OracleMode::Msd { steps } }));
                }
                let geometry = p.geometry()?;
                let gas = p.gas("")?;
                let field = FieldSpec::new(p.opt_f64("f0_hz")?.unwrap_or(0.0))?;
                // the matched step makes per-crossing loss reproduce the Robin condition
                let dt = p.opt_time("dt")?.unwrap_or_else(|| matched_dt(&gas, &geometry));
                let mut config = SimConfig::new(geometry, gas, field, dt);
                config.n_particles = p.usize_or("particles", config.n_particles)?;
                config.total_time = p.time("total_time")?;
                config.burn_in = p.opt_time("burn_in")?.unwrap_or(0.0);
                config.sample_every = p.usize_or("sample_every", 1)?;
                config.group_size = p.usize_or("group_size", 1)?;
                config.segment_len = p.usize_or("segment_len", config.segment_len)?;
                config.seed = seed;
                let count = p.usize_or("count", 200)?;
                let mode = match mode_name.as_str() {
                    "decay" => OracleMode::Decay { mode_index: p.usize_or("mode_index", 0)?, count },
                    "spectrum" => {
                        let axis = probe_axis(p, &geometry)?;
                        config.probe = Some(ProbeProfile::gaussian(p.length("w0")?, axis)?);
                        config.wall_rule = WallRule::Rethermalize;
                        OracleMode::Spectrum { count, smoothing: p.usize_or("smoothing_bins", 2)? }
                    }
                    other => {
                        return Err(ConfigError::Invalid { key: "mode".into(), reason: format!("'{other}' is not decay, spectrum or msd") }.into())
                    }
                };
                config.validate()?;
                Ok(Plan::Oracle(OraclePlan { config, mode }))
            }
            other => Err(ConfigError::Invalid { key: "command".into(), reason: format!("unknown command '{other}'") }.into()),
        }
    }

    fn warnings(&self) -> Vec<String> {
        match self {
            Plan::Modes { geometry, gas, .. } => gas.validity_warnings(geometry),
            Plan::Spectrum(s) => s.gas.validity_warnings(&s.geometry),
            Plan::Squeezing(s) => s.gas.validity_warnings(&s.geometry),
            Plan::Exchange { spec, .. } => {
                let g = spec.geometry();
                let mut w = spec.alkali.gas.validity_warnings(&g);
                w.extend(spec.noble.gas.validity_warnings(&g));
                w
            }
            Plan::Oracle(o) => match o.mode {
                OracleMode::Msd { .. } => Vec::new(),
                _ => o.config.gas.validity_warnings(&o.config.geometry),
            },
        }
    }

    fn execute(&self, out: &Path) -> CliResult<Report> {
        let mut r = Report::default();
        match self {
            Plan::Modes { geometry, gas, truncation } => {
                let basis = build_basis(geometry, gas, *truncation)?;
                let labels = basis.labels();
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Io(e.to_string());
                w.write_record(["label", "k_per_cm", "gamma_per_s", "amplitude"]).map_err(io)?;
                for (m, l) in basis.modes.iter().zip(&labels) {
                    w.write_record([l.clone(), format!("{:?}", m.k), format!("{:?}", m.gamma), format!("{:?}", m.amplitude)]).map_err(io)?;
                }
                fs::write(out.join("modes.csv"), w.into_inner().map_err(|e| CliError::Io(e.to_string()))?)
                    .map_err(|e| CliError::Io(e.to_string()))?;
                r.outputs.push("modes.csv".into());
                write_file(&out.join("basis.json"), &basis.to_json()?)?;
                r.outputs.push("basis.json".into());
                r.summary = json!({ "modes": basis.len(), "slowest_gamma_per_s": basis.modes[0].gamma });
                r.lines.push(format!("{} modes, slowest decay {:.6e} 1/s", basis.len(), basis.modes[0].gamma));
            }
            Plan::Spectrum(s) => run_spectrum(s, out, &mut r)?,
            Plan::Squeezing(s) => run_squeezing(s, out, &mut r)?,
            Plan::Exchange { spec, j_grid, n_grid } => {
                let map = fidelity_map(spec, j_grid, n_grid)?;
                let mut rows = Vec::new();
                for (i, j) in map.j_values.iter().enumerate() {
                    for (k, n) in map.n_values.iter().enumerate() {
                        rows.push(vec![*j, *n, map.fidelity[i][k], map.t_opt[i][k]]);
                    }
                }
                r.table(out, "fidelity.csv", &["J_per_s", "N", "fidelity", "t_opt_s"], rows)?;
                r.summary = json!({
                    "j_violations": map.j_violations.len(),
                    "n_violations": map.n_violations.len(),
                    "max_fidelity": map.fidelity.iter().flatten().copied().fold(0.0, f64::max),
                });
                r.lines.push(format!("{}x{} fidelity map written", j_grid.len(), n_grid.len()));
            }
            Plan::Oracle(o) => run_oracle(o, out, &mut r)?,
        }
        Ok(r)
    }
}

fn default_frequency_grid(basis: &ModeBasis, field: FieldSpec, waist: f64) -> crate::Result<Vec<f64>> {
    let slow = basis.modes.iter().map(|m| m.gamma).find(|g| *g > 0.0).unwrap_or(1.0);
    let fast = beam_reference_rate(basis.wall.diffusion, waist).max(basis.modes.last().map_or(slow, |m| m.gamma));
    symmetric_log(field.larmor_hz, slow / (2.0 * std::f64::consts::PI) * 1e-3, fast * 1e2, 300)
}

fn run_spectrum(s: &SpectrumPlan, out: &Path, r: &mut Report) -> CliResult<()> {
    let basis = build_basis(&s.geometry, &s.gas, s.truncation)?;
    if !s.sweep {
        let probe = ProbeProfile::gaussian(s.waists[0], s.axis)?;
        let grid = match &s.fgrid {
            Some(g) => g.clone(),
            None => default_frequency_grid(&basis, s.field, probe.waist)?,
        };
        let spec = spin_noise_spectrum(&basis, &probe, s.field, s.stats, &grid)?;
        let reference = spec.reference.clone().unwrap_or_default();
        let rows = (0..grid.len()).map(|i| vec![grid[i], spec.sxx[i], reference[i]]);
        r.table(out, "spectrum.csv", &["f_hz", "sxx_per_hz", "reference_per_hz"], rows)?;
        let fwhm = full_width_half_max(&spec)?;
        let zeta = noise_content(&spec)?;
        r.summary = json!({
            "fwhm_hz": fwhm,
            "noise_content": zeta,
            "reference_gamma_per_s": spec.reference_gamma,
            "captured_weight": spec.weights.iter().sum::<f64>(),
            "singular_power": spec.singular_power,
            "modes": basis.len(),
        });
        r.lines.push(format!("FWHM {fwhm:.6e} Hz, noise content {zeta:.6}"));
    } else {
        let mut rows = Vec::new();
        for &w in &s.waists {
            let probe = ProbeProfile::gaussian(w, s.axis)?;
            let weights = ModeWeights::from_probe(&basis, &probe)?;
            let grid = default_frequency_grid(&basis, s.field, w)?;
            let gw = beam_reference_rate(s.gas.diffusion, w);
            let spec = lorentzian_spectrum(&weights, s.field, s.stats, &grid, Some(gw))?;
            rows.push(vec![w, noise_content(&spec)?, full_width_half_max(&spec)?, weights.total()]);
        }
        r.table(out, "noise_content.csv", &["w0_cm", "noise_content", "fwhm_hz", "captured_weight"], rows.clone())?;
        r.summary = json!({ "points": rows.len(), "modes": basis.len() });
        r.lines.push(format!("noise content for {} waists written", rows.len()));
    }
    Ok(())
}

fn run_squeezing(s: &SqueezingPlan, out: &Path, r: &mut Report) -> CliResult<()> {
    match &s.weights {
        SqueezeWeights::Probe { waists, axis, truncation } => {
            let basis = build_basis(&s.geometry, &s.gas, *truncation)?;
            let mut rows = Vec::new();
            let mut lifetimes = Vec::new();
            for &w in waists {
                let probe = ProbeProfile::gaussian(w, *axis)?;
                let weights = ModeWeights::from_probe(&basis, &probe)?;
                let res = squeezing_from_weights(&weights, s.x2_0, &s.times, Some(beam_reference_rate(s.gas.diffusion, w)))?;
                let reference = res.reference.clone().unwrap_or_default();
                for i in 0..res.times.len() {
                    rows.push(vec![w, res.times[i], res.variance[i], squeezing_db(res.variance[i]), reference[i]]);
                }
                lifetimes.push(json!({
                    "w0_cm": w,
                    "lifetime_s": res.lifetime,
                    "reference_lifetime_s": res.reference_lifetime,
                    "captured_weight": res.captured_weight,
                }));
            }
            r.table(out, "squeezing.csv", &["w0_cm", "t_s", "variance", "squeezing_db", "reference_variance"], rows)?;
            let mut line = String::from("half-dB lifetimes:");
            for l in &lifetimes {
                match l["lifetime_s"].as_f64() {
                    Some(t) => write!(line, " w0 = {} cm: {t:.4e} s;", l["w0_cm"]),
                    None => write!(line, " w0 = {} cm: not reached;", l["w0_cm"]),
                }
                .expect("writing to a String");
            }
            r.lines.push(line);
            r.summary = json!({ "x2_0": s.x2_0, "lifetimes": lifetimes, "modes": basis.len() });
        }
        SqueezeWeights::RadialUniform { modes } => {
            let weights = ModeWeights::radial_uniform(&s.geometry, &s.gas, *modes)?;
            let res = squeezing_from_weights(&weights, s.x2_0, &s.times, None)?;
            let rows = (0..res.times.len()).map(|i| vec![res.times[i], res.variance[i], squeezing_db(res.variance[i])]);
            r.table(out, "squeezing.csv", &["t_s", "variance", "squeezing_db"], rows)?;
            r.summary = json!({
                "x2_0": s.x2_0,
                "lifetime_s": res.lifetime,
                "captured_weight": res.captured_weight,
                "modes": modes,
            });
            let lifetime = res.lifetime.map_or("not reached".to_string(), |t| format!("{t:.4e} s"));
            r.lines.push(format!("half-dB lifetime {lifetime}, captured weight {:.6}", res.captured_weight));
        }
    }
    Ok(())
}

fn run_oracle(o: &OraclePlan, out: &Path, r: &mut Report) -> CliResult<()> {
    let c = &o.config;
    match o.mode {
        OracleMode::Msd { steps } => {
            let m = msd_check(c.gas.diffusion, c.dt, steps, c.n_particles, c.seed)?;
            r.table(out, "msd.csv", &["t_s", "msd_cm2", "expected_cm2", "sigma_cm2"], [vec![m.time, m.msd, m.expected, m.sigma]])?;
            r.summary = json!({ "z_score": m.z_score() });
            r.lines.push(format!("MSD {:.6} vs {:.6} cm^2 (z = {:.2})", m.msd, m.expected, m.z_score()));
        }
        OracleMode::Decay { mode_index, count } => {
            let basis = build_basis(&c.geometry, &c.gas, Truncation::new(count.max(mode_index + 1)))?;
            let mode = basis.modes.get(mode_index).ok_or_else(|| {
                CliError::Config(ConfigError::Invalid { key: "mode_index".into(), reason: format!("basis has {} modes", basis.len()) })
            })?;
            let fit = mode_decay_check(c, mode)?;
            let rows = fit.times.iter().zip(&fit.projection).map(|(t, v)| vec![*t, *v, (-mode.gamma * t).exp()]);
            r.table(out, "decay.csv", &["t_s", "projection", "mode_prediction"], rows)?;
            r.summary = json!({
                "fitted_gamma_per_s": fit.gamma,
                "mode_gamma_per_s": mode.gamma,
                "r_squared": fit.r_squared,
                "window_s": [fit.window.0, fit.window.1],
                "diagnostics": fit.diagnostics,
            });
            r.lines.push(format!("fitted {:.6} 1/s vs mode {:.6} 1/s", fit.gamma, mode.gamma));
        }
        OracleMode::Spectrum { count, smoothing } => {
            let emp = empirical_spectrum(c)?;
            let probe = c.probe.expect("spectrum mode sets a probe");
            let basis = build_basis(&c.geometry, &c.gas, Truncation::new(count).even_only(true))?;
            let grid = &emp.spectrum.frequencies;
            let analytic = spin_noise_spectrum(&basis, &probe, c.field, SpinStatistics::Polarized, grid)?;
            let cmp = shape_ratio(&emp.spectrum, &analytic, smoothing)?;
            let rows = (0..grid.len()).map(|i| vec![grid[i], emp.spectrum.sxx[i], analytic.sxx[i]]);
            r.table(out, "oracle_spectrum.csv", &["f_hz", "psd", "analytic"], rows)?;
            r.summary = json!({
                "segments": emp.segments,
                "shape_ratio_min": cmp.min_ratio,
                "shape_ratio_max": cmp.max_ratio,
                "diagnostics": emp.diagnostics,
            });
            r.lines.push(format!("{} segments, shape ratio in [{:.4}, {:.4}]", emp.segments, cmp.min_ratio, cmp.max_ratio));
        }
    }
    Ok(())
}
