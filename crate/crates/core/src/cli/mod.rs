//! Command-line front end: presets, sweeps, calibration and table output.
//!
//! Exit codes: 0 success, 2 invalid input (arguments, configuration, preset
//! name, grid), 3 numerical failure, 1 I/O failure.

pub mod calibrate;
pub mod output;
pub mod presets;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::doppler::DopplerAverager;
use crate::optics::{delay_table, group_index_at, superluminal_crossover, track_branch, DispersionPoint};
use crate::params::{Config, ValidatedConfig};
use crate::pulse::{
    dispersion_coefficients, first_order_peak_time, input_spectrum, input_time, output_spectrum,
    propagate_analytic, pulse_metrics, DispersionCoefficients, PulseGrid, PulseSpec, PulseTrace,
};
use crate::response::{check_monotone, spectrum_with, Mode};

use self::calibrate::calibrate;
use self::output::{render, Cell, Format, Table};
use self::presets::{preset, Quantity, Scenario};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "chiral-eit", version, about = "Chiral response, group delay and pulse propagation in a four-level double-lambda medium")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Susceptibilities, chiralities, refractive and group index on a detuning grid.
    Spectrum(SpectrumArgs),
    /// Group index, group velocity and delay at zero probe detuning.
    Delay(DelayArgs),
    /// Ω₃ at which the cold and hot group indices cross.
    Crossover(CrossoverArgs),
    /// Gaussian pulse intensities before and after the medium.
    Pulse(PulseArgs),
    /// Root-find κ_e so the group index at zero detuning hits a target.
    Calibrate(CalibrateArgs),
    /// Print the parameters encoded by a preset.
    PresetDump(PresetDumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Cold,
    Hot,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Cold => vec![Mode::Cold],
            ModeArg::Hot => vec![Mode::Hot],
            ModeArg::Both => vec![Mode::Cold, Mode::Hot],
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// JSON configuration file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Named figure preset (see preset-dump --list).
    #[arg(long)]
    pub preset: Option<String>,
    /// Override the density coupling κ_e.
    #[arg(long = "kappa-e")]
    pub kappa_e: Option<f64>,
    /// Calibrate κ_e against the preset family's target before running.
    #[arg(long, conflicts_with_all = ["kappa_e", "config"])]
    pub calibrated: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Emit {
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub emit: Emit,
    /// Detuning grid lo:hi:count in units of γ.
    #[arg(long, default_value = "-5:5:1001", allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Doppler widths to overlay (units of γ).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub vd: Vec<f64>,
    /// Ω₃ values to overlay (units of γ).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega3: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DelayArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub emit: Emit,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub vd: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega3: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CrossoverArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub emit: Emit,
    /// Ω₃ search interval lo:hi in units of γ.
    #[arg(long, default_value = "1.5:5")]
    pub range: String,
}

#[derive(Debug, Clone, Args)]
pub struct PulseArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub emit: Emit,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Propagate through vacuum (n₀ = 1, G_vd = 0) instead of the medium.
    #[arg(long)]
    pub vacuum: bool,
    /// Input 1/e half-width (s).
    #[arg(long)]
    pub tau0: Option<f64>,
    /// Upshift of the pulse centre from the carrier (rad/s).
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub source: Source,
    /// Target value (default: the preset family's target).
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<f64>,
    /// N_g or n_0.
    #[arg(long, default_value = "N_g")]
    pub quantity: String,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Ω₃ at which the target applies (default: the configured value).
    #[arg(long, allow_hyphen_values = true)]
    pub omega3: Option<f64>,
    /// File receiving the calibrated configuration (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PresetDumpArgs {
    #[arg(long, required_unless_present_any = ["list", "all"])]
    pub preset: Option<String>,
    /// Print every preset name.
    #[arg(long)]
    pub list: bool,
    /// Write every preset as NAME.json into the --out directory.
    #[arg(long, requires = "out")]
    pub all: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Spectrum(a) => {
            let tables = run_spectrum(a)?;
            emit(&a.emit, &tables)
        }
        Command::Delay(a) => {
            let (tables, failed) = run_delay(a)?;
            emit(&a.emit, &tables)?;
            match failed {
                Some(msg) => Err(CliError::Numerical(msg)),
                None => Ok(()),
            }
        }
        Command::Crossover(a) => {
            let tables = run_crossover(a)?;
            emit(&a.emit, &tables)
        }
        Command::Pulse(a) => {
            let tables = run_pulse(a)?;
            emit(&a.emit, &tables)
        }
        Command::Calibrate(a) => run_calibrate(a),
        Command::PresetDump(a) => run_preset_dump(a),
    }
}

fn write_text(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit(e: &Emit, tables: &[Table]) -> Result<(), CliError> {
    write_text(&e.out, &render(tables, e.format))
}

/// A validated configuration together with the preset it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub name: String,
    pub cfg: ValidatedConfig,
    pub scenario: Option<Scenario>,
}

fn validated(c: &Config) -> Result<ValidatedConfig, CliError> {
    c.validate().map_err(|errs| {
        let lines: Vec<String> = errs.0.iter().map(|e| format!("  {e}")).collect();
        CliError::Validation(format!("invalid configuration:\n{}", lines.join("\n")))
    })
}

pub fn load(src: &Source) -> Result<Loaded, CliError> {
    let (name, config, scenario) = match (&src.config, &src.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            let c = Config::from_json(&text).map_err(invalid)?;
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (name, c, None)
        }
        (None, Some(p)) => {
            let s = preset(p).ok_or_else(|| {
                invalid(format!("unknown preset '{p}'; known presets: {}", presets::names().join(", ")))
            })?;
            (s.name.clone(), s.config.clone(), Some(s))
        }
        (None, None) => ("default".to_string(), Config::default(), preset("fig2a")),
    };
    let mut cfg = validated(&config)?;
    if let Some(k) = src.kappa_e {
        cfg = cfg.with_density_coupling(k).map_err(|e| invalid(format!("invalid --kappa-e: {e}")))?;
    }
    if src.calibrated {
        let s = scenario.as_ref().expect("preset or default scenario present");
        let record = calibrate_scenario(s, cfg.quadrature().clone())?;
        eprintln!("calibration: {}", serde_json::to_string(&record).expect("record serializes"));
        cfg = cfg.with_density_coupling(record.kappa_e).map_err(invalid)?;
    }
    Ok(Loaded { name, cfg, scenario })
}

/// Calibrates κ_e on the target scenario of a preset family.
pub fn calibrate_scenario(
    s: &Scenario,
    quadrature: crate::doppler::QuadratureSpec,
) -> Result<crate::params::CalibrationRecord, CliError> {
    let t = &s.calibration;
    let target = preset(&t.scenario).expect("calibration scenario is a preset");
    let cfg = validated(&target.config)?.with_quadrature(quadrature).map_err(invalid)?;
    calibrate(&cfg, &t.scenario, t.mode, t.quantity, t.value).map_err(numerical)
}

/// Parses lo:hi:count into `count` evenly spaced detunings.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || invalid(format!("grid '{spec}' must be lo:hi:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(invalid("empty detuning grid (count = 0)"));
    }
    let grid: Vec<f64> = if count == 1 {
        vec![lo]
    } else {
        let h = (hi - lo) / (count - 1) as f64;
        (0..count).map(|k| if k == count - 1 { hi } else { lo + k as f64 * h }).collect()
    };
    check_monotone(&grid).map_err(|e| invalid(format!("grid '{spec}': {e}")))?;
    Ok(grid)
}

fn parse_range(spec: &str) -> Result<(f64, f64), CliError> {
    let bad = || invalid(format!("range '{spec}' must be lo:hi"));
    let (a, b) = spec.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn modes_for(arg: Option<ModeArg>, loaded: &Loaded) -> Vec<Mode> {
    match (arg, &loaded.scenario) {
        (Some(m), _) => m.modes(),
        (None, Some(s)) if loaded.name == s.name => s.modes.clone(),
        _ => vec![Mode::Cold, Mode::Hot],
    }
}

/// Configurations for every (V_D, Ω₃) pair of the requested sweep.
fn sweep(loaded: &Loaded, vd: &[f64], omega3: &[f64]) -> Result<Vec<ValidatedConfig>, CliError> {
    let from_preset = loaded.scenario.as_ref().filter(|s| s.name == loaded.name);
    let vds: Vec<f64> = match (vd.is_empty(), from_preset) {
        (false, _) => vd.to_vec(),
        (true, Some(s)) if !s.vd_sweep.is_empty() => s.vd_sweep.clone(),
        _ => vec![loaded.cfg.medium().v_doppler],
    };
    let o3s: Vec<f64> = match (omega3.is_empty(), from_preset) {
        (false, _) => omega3.to_vec(),
        (true, Some(s)) if !s.omega3_sweep.is_empty() => s.omega3_sweep.clone(),
        _ => vec![loaded.cfg.system().omega_3],
    };
    let mut out = Vec::new();
    for &v in &vds {
        for &o in &o3s {
            let c = loaded
                .cfg
                .with_doppler_width(v)
                .and_then(|c| c.with_omega_3(o))
                .map_err(|e| invalid(format!("V_D = {v}, Omega_3 = {o}: {e}")))?;
            out.push(c);
        }
    }
    Ok(out)
}

const SPECTRUM_COLUMNS: [&str; 16] = [
    "scenario", "mode", "v_doppler", "omega_3", "delta_p", "chi_e_re", "chi_e_im", "chi_m_re", "chi_m_im",
    "xi_eh_re", "xi_eh_im", "xi_he_re", "xi_he_im", "n_r", "n_i", "n_g",
];

/// Local-stencil group index, on the same branch as the tracked index `n`.
fn aligned_point(
    cfg: &ValidatedConfig,
    mode: Mode,
    averager: &DopplerAverager,
    delta_p: f64,
    n: num_complex::Complex64,
) -> Result<DispersionPoint, CliError> {
    let p = group_index_at(cfg, mode, averager, delta_p).map_err(numerical)?;
    if (p.n_complex + n).norm() < (p.n_complex - n).norm() {
        Ok(DispersionPoint::new(delta_p, -p.n_complex, -p.dn_ddelta, cfg.medium()))
    } else {
        Ok(p)
    }
}

pub fn run_spectrum(a: &SpectrumArgs) -> Result<Vec<Table>, CliError> {
    let loaded = load(&a.source)?;
    let grid = parse_grid(&a.grid)?;
    let modes = modes_for(a.mode, &loaded);
    let configs = sweep(&loaded, &a.vd, &a.omega3)?;
    let mut table = Table::new("spectrum", &SPECTRUM_COLUMNS);
    for cfg in &configs {
        let averager = DopplerAverager::new(cfg.quadrature());
        for &mode in &modes {
            let spec = spectrum_with(cfg, &grid, mode, &averager).map_err(numerical)?;
            let n = track_branch(&spec).map_err(numerical)?;
            let points: Vec<DispersionPoint> = grid
                .par_iter()
                .zip(&n)
                .map(|(&d, &ni)| aligned_point(cfg, mode, &averager, d, ni))
                .collect::<Result<_, _>>()?;
            for ((d, r), (ni, p)) in grid.iter().zip(&spec).zip(n.iter().zip(&points)) {
                table.push(vec![
                    loaded.name.as_str().into(),
                    mode.label().into(),
                    cfg.medium().v_doppler.into(),
                    cfg.system().omega_3.into(),
                    (*d).into(),
                    r.chi_e.re.into(),
                    r.chi_e.im.into(),
                    r.chi_m.re.into(),
                    r.chi_m.im.into(),
                    r.xi_eh.re.into(),
                    r.xi_eh.im.into(),
                    r.xi_he.re.into(),
                    r.xi_he.im.into(),
                    ni.re.into(),
                    ni.im.into(),
                    p.n_g.into(),
                ]);
            }
        }
    }
    Ok(vec![table])
}

/// Returns the table and, when some rows failed, a summary of the failures.
pub fn run_delay(a: &DelayArgs) -> Result<(Vec<Table>, Option<String>), CliError> {
    let loaded = load(&a.source)?;
    let modes = modes_for(a.mode, &loaded);
    let configs = sweep(&loaded, &a.vd, &a.omega3)?;
    let jobs: Vec<(String, ValidatedConfig, Mode)> = configs
        .iter()
        .flat_map(|c| modes.iter().map(|&m| (loaded.name.clone(), c.clone(), m)))
        .collect();
    let rows = delay_table(&jobs);
    let mut table = Table::new(
        "delay",
        &["scenario", "mode", "omega_3", "v_doppler", "n_g", "v_g", "tau_ns", "status"],
    );
    let mut failures = Vec::new();
    for (row, (_, cfg, _)) in rows.iter().zip(&jobs) {
        let (n_g, v_g, tau, status) = match &row.result {
            Ok(p) => (p.n_g, p.v_g, p.tau * 1e9, "ok".to_string()),
            Err(e) => {
                failures.push(format!("{} {} Omega_3 = {}: {e}", row.scenario, row.mode, row.omega_3));
                (f64::NAN, f64::NAN, f64::NAN, e.clone())
            }
        };
        table.push(vec![
            row.scenario.as_str().into(),
            row.mode.label().into(),
            row.omega_3.into(),
            cfg.medium().v_doppler.into(),
            n_g.into(),
            v_g.into(),
            tau.into(),
            status.into(),
        ]);
    }
    let failed = (!failures.is_empty()).then(|| failures.join("\n"));
    Ok((vec![table], failed))
}

pub fn run_crossover(a: &CrossoverArgs) -> Result<Vec<Table>, CliError> {
    let loaded = load(&a.source)?;
    let (lo, hi) = parse_range(&a.range)?;
    let x = superluminal_crossover(&loaded.cfg, lo, hi).map_err(numerical)?;
    let mut table = Table::new("crossover", &["scenario", "omega3_lo", "omega3_hi", "omega3_crossover"]);
    table.push(vec![loaded.name.as_str().into(), lo.into(), hi.into(), x.into()]);
    Ok(vec![table])
}

/// Normalized intensities, trimmed to rows where some column exceeds 10⁻¹².
fn intensity_table(name: &str, axis_name: &str, axis: &[f64], traces: &[(&str, &PulseTrace)]) -> Table {
    let mut columns = vec![axis_name];
    columns.extend(traces.iter().map(|(l, _)| *l));
    let mut table = Table::new(name, &columns);
    let cols: Vec<Vec<f64>> = traces.iter().map(|(_, t)| t.normalized_intensity()).collect();
    let visible = |j: usize| cols.iter().any(|c| c[j] > 1e-12);
    let first = (0..axis.len()).find(|&j| visible(j)).unwrap_or(0);
    let last = (0..axis.len()).rev().find(|&j| visible(j)).unwrap_or(0);
    for j in first..=last {
        let mut row: Vec<Cell> = vec![axis[j].into()];
        row.extend(cols.iter().map(|c| Cell::Num(c[j])));
        table.push(row);
    }
    table
}

pub fn run_pulse(a: &PulseArgs) -> Result<Vec<Table>, CliError> {
    let loaded = load(&a.source)?;
    let cfg = &loaded.cfg;
    let mut ps = PulseSpec::for_medium(cfg);
    if let Some(t) = a.tau0 {
        ps.tau_0 = t;
    }
    if let Some(d) = a.delta {
        ps.delta = d;
    }
    ps.check().map_err(invalid)?;
    let length = cfg.medium().length_l;

    let media: Vec<(String, DispersionCoefficients)> = if a.vacuum {
        vec![(
            "vacuum".to_string(),
            DispersionCoefficients {
                n0: 1.0,
                dng_ddelta: 0.0,
                g_vd: 0.0,
            },
        )]
    } else {
        let averager = DopplerAverager::new(cfg.quadrature());
        modes_for(a.mode, &loaded)
            .into_iter()
            .map(|m| {
                dispersion_coefficients(cfg, m, &averager)
                    .map(|d| (m.label().to_string(), d))
                    .map_err(numerical)
            })
            .collect::<Result<_, _>>()?
    };
    let pairs: Vec<(f64, f64)> = media.iter().map(|(_, d)| (d.n0, d.g_vd)).collect();
    let grid = PulseGrid::covering(&ps, &pairs, length);
    let input_t = input_time(&ps, &grid);
    let input_w = input_spectrum(&ps, &grid).map_err(numerical)?;

    let mut metrics = Table::new(
        "metrics",
        &[
            "mode", "n0", "dng_ddelta", "g_vd", "peak_shift_ns", "predicted_shift_ns", "width_ratio", "distortion",
            "raw_distortion",
        ],
    );
    let mut outs_t = Vec::new();
    let mut outs_w = Vec::new();
    for (label, d) in &media {
        let out_t = propagate_analytic(&ps, &grid, d.n0, d.g_vd, length);
        let out_w = output_spectrum(&ps, &grid, d.n0, d.g_vd, length);
        let m = pulse_metrics(&input_t, &out_t).map_err(numerical)?;
        metrics.push(vec![
            label.as_str().into(),
            d.n0.into(),
            d.dng_ddelta.into(),
            d.g_vd.into(),
            (m.peak_shift * 1e9).into(),
            (first_order_peak_time(&ps, d.n0, d.g_vd, length) * 1e9).into(),
            m.width_ratio.into(),
            m.distortion.into(),
            m.raw_distortion.into(),
        ]);
        outs_t.push(out_t);
        outs_w.push(out_w);
    }

    let t_axis: Vec<f64> = grid.times().iter().map(|t| t / ps.tau_0).collect();
    let w_axis: Vec<f64> = grid.freqs().iter().map(|u| u / ps.delta_w()).collect();
    let mut traces_t: Vec<(&str, &PulseTrace)> = vec![("input", &input_t)];
    let mut traces_w: Vec<(&str, &PulseTrace)> = vec![("input", &input_w)];
    for (i, (label, _)) in media.iter().enumerate() {
        traces_t.push((label.as_str(), &outs_t[i]));
        traces_w.push((label.as_str(), &outs_w[i]));
    }
    Ok(vec![
        intensity_table("time", "t_over_tau0", &t_axis, &traces_t),
        intensity_table("frequency", "w_over_dw", &w_axis, &traces_w),
        metrics,
    ])
}

pub fn run_calibrate(a: &CalibrateArgs) -> Result<(), CliError> {
    if a.source.calibrated {
        return Err(invalid("--calibrated cannot be combined with calibrate"));
    }
    let loaded = load(&a.source)?;
    let quantity = Quantity::parse(&a.quantity)
        .ok_or_else(|| invalid(format!("quantity '{}' must be N_g or n_0", a.quantity)))?;
    let mode = match a.mode {
        Some(ModeArg::Cold) => Mode::Cold,
        Some(ModeArg::Hot) => Mode::Hot,
        Some(ModeArg::Both) => return Err(invalid("calibrate needs a single mode (cold or hot)")),
        None => loaded.scenario.as_ref().map(|s| s.calibration.mode).unwrap_or(Mode::Cold),
    };
    let (cfg, scenario, target) = match (a.target, &loaded.scenario) {
        (Some(t), _) => (loaded.cfg.clone(), loaded.name.clone(), t),
        (None, Some(s)) => {
            let t = &s.calibration;
            let c = validated(&preset(&t.scenario).expect("target preset").config)?;
            (c, t.scenario.clone(), t.value)
        }
        (None, None) => return Err(invalid("calibrate needs --target for a config file")),
    };
    let cfg = match a.omega3 {
        Some(o) => cfg.with_omega_3(o).map_err(invalid)?,
        None => cfg,
    };
    let record = calibrate(&cfg, &scenario, mode, quantity, target).map_err(numerical)?;
    eprintln!(
        "kappa_e = {} ({} {} = {} at Omega_3 = {})",
        output::number(record.kappa_e),
        record.mode,
        record.quantity,
        output::number(record.achieved),
        cfg.system().omega_3
    );
    let mut out = loaded.cfg.to_config();
    out.medium.density_coupling = record.kappa_e;
    out.calibration = Some(record);
    let mut text = out.to_json();
    text.push('\n');
    write_text(&a.out, &text)
}

pub fn preset_json(s: &Scenario) -> String {
    let mut text = serde_json::to_string_pretty(s).expect("scenario serializes");
    text.push('\n');
    text
}

pub fn run_preset_dump(a: &PresetDumpArgs) -> Result<(), CliError> {
    if a.list {
        let mut text = presets::names().join("\n");
        text.push('\n');
        return write_text(&None, &text);
    }
    if a.all {
        let dir = a.out.as_ref().expect("clap requires --out");
        fs::create_dir_all(dir)?;
        for n in presets::names() {
            let s = preset(n).expect("listed preset");
            fs::write(dir.join(format!("{n}.json")), preset_json(&s))?;
        }
        return Ok(());
    }
    let name = a.preset.as_deref().expect("clap requires --preset");
    let s = preset(name).ok_or_else(|| invalid(format!("unknown preset '{name}'")))?;
    write_text(&a.out, &preset_json(&s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("-10:10:2001").unwrap();
        assert_eq!(g.len(), 2001);
        assert_eq!((g[0], g[1000], g[2000]), (-10.0, 0.0, 10.0));
        assert_eq!(parse_grid("0.5:1:1").unwrap(), vec![0.5]);
        for bad in ["1:2:0", "1:2", "a:2:3", "1:1:3"] {
            assert_eq!(parse_grid(bad).unwrap_err().exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("1.5:5").unwrap(), (1.5, 5.0));
        assert!(parse_range("5:1.5").is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::Validation(String::new()).exit_code(), 2);
        assert_eq!(CliError::Numerical(String::new()).exit_code(), 3);
    }
}
