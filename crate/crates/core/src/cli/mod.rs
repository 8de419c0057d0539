//! Command-line front end.
//!
//! `dqdsim <subcommand> [--config FILE] [--out PATH] [--format csv|svg] ...`
//!
//! Exit codes: 0 on success, 1 for usage, configuration and parameter
//! errors, 2 for runtime and I/O failures.

pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{ConfigError, GridRange, RunConfig};
pub use svg::{render_svg, Colormap, Field, SvgOptions};

use crate::analysis::{cnot_success_min, fit_rabi, RabiFit};
use crate::dynamics::evolve_real;
use crate::error::Error;
use crate::experiments::{
    cross_dependence, locate_3pi, run_cnot_tomography, run_conditional_rabi,
    run_controlled_universal, run_fidelity_vs_j, run_lzs_control, run_rabi, run_sync_scan,
    run_two_pulse, sync_scan_csv, two_pulse_metrics, LzsSweep, ProbabilityMap,
};
use crate::model::{thermal_initial_state, to_real_form};
use crate::output::{fmt_sig, CsvTable};
use crate::pulses::Schedule;

pub const SUBCOMMANDS: [&str; 11] = [
    "rabi",
    "conditional-rabi",
    "two-pulse",
    "tomography",
    "fidelity-vs-j",
    "lzs",
    "controlled-universal",
    "sync-scan",
    "fit",
    "waveform",
    "trajectory",
];

pub const USAGE: &str = "\
usage: dqdsim <subcommand> [options]

subcommands:
  rabi                  upper-qubit Rabi sweep over W1
  conditional-rabi      Rabi sweep over W1 and the lower detuning
  two-pulse             lower pulse W2 then upper pulse W1
  tomography            CNOT population tomography
  fidelity-vs-j         CNOT fidelity F and F' over coupling values
  lzs                   LZS-controlled rotation map
  controlled-universal  short pulses on both qubits over baseline detunings
  sync-scan             controlled-universal maps over channel delays
  fit                   fit the Rabi model to a CSV column (--input)
  waveform              detuning waveform of the [schedule] section
  trajectory            probabilities over time for the [schedule] section

options:
  --config FILE       INI configuration (defaults when omitted)
  --out PATH          output file (default <subcommand>.csv or .svg)
  --format csv|svg    svg renders 2-D maps only
  --colormap NAME     gray or viridis
  --cell-px N         heatmap cell size in pixels
  --parallel N        worker threads (default: all processors)
  --j LIST            comma-separated couplings for fidelity-vs-j, ueV
  --set KEY=VALUE     override a config key (section.key or unique key)
  --input FILE        CSV for fit
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Svg,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Svg => "svg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    /// Main output file. Companion files share its stem.
    pub path: PathBuf,
    pub format: OutputFormat,
    pub svg: SvgOptions,
}

impl OutputSpec {
    pub fn csv(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            format: OutputFormat::Csv,
            svg: SvgOptions::default(),
        }
    }

    /// `<dir>/<stem><suffix>.<ext>`.
    pub fn sibling(&self, suffix: &str, ext: &str) -> PathBuf {
        let stem = self
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.path.with_file_name(format!("{stem}{suffix}.{ext}"))
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(ConfigError),
    Sim(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Sim(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Sim(e) => match e {
                Error::InvalidParameter { .. }
                | Error::InvalidGrid(_)
                | Error::InvalidLabel(_)
                | Error::InvalidSchedule(_)
                | Error::StepTooLarge { .. }
                | Error::OverlapAmbiguity { .. }
                | Error::InsufficientData(_) => 1,
                Error::OutOfRange { .. } | Error::StateInvalid(_) | Error::FitDiverged(_) => 2,
            },
            CliError::Io(..) => 2,
        }
    }

    fn report(&self) {
        match self {
            CliError::Usage(m) => eprintln!("error: {m}\n\n{USAGE}"),
            CliError::Config(e) => eprintln!("error: {e}"),
            CliError::Sim(e) => eprintln!("error: {e}"),
            CliError::Io(p, e) => eprintln!("error: {}: {e}", p.display()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Runs one subcommand with a validated config; prints the summary line on
/// success and the error otherwise. Returns the exit code.
pub fn dispatch(subcommand: &str, config: &RunConfig, out: &OutputSpec) -> i32 {
    match execute(subcommand, config, out) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            e.report();
            e.exit_code()
        }
    }
}

fn execute(sub: &str, config: &RunConfig, out: &OutputSpec) -> CliResult<String> {
    if !SUBCOMMANDS.contains(&sub) {
        return Err(CliError::Usage(format!("unknown subcommand `{sub}`")));
    }
    config.validate()?;
    let setup = config.setup();
    let svg_only_maps = || {
        if out.format == OutputFormat::Svg {
            Err(CliError::Usage(format!(
                "`{sub}` has no 2-D map; svg output is unavailable"
            )))
        } else {
            Ok(())
        }
    };
    match sub {
        "rabi" => {
            svg_only_maps()?;
            let map = run_rabi(&setup, &config.rabi.w1.axis("W1", "ps")?)?;
            write_file(&out.path, &map.to_csv())?;
            Ok(match fit_rabi(&map.row_u(0), None) {
                Ok(f) => format!("rabi: freq={:.4} GHz a0={:.3}", f.freq, f.a0),
                Err(e) => format!("rabi: points={} (fit unavailable: {e})", map.grid.x.len()),
            })
        }
        "conditional-rabi" => {
            let c = &config.conditional_rabi;
            let map = run_conditional_rabi(
                &setup,
                &c.w1.axis("W1", "ps")?,
                &c.eps_l.axis("eps_L", "ueV")?,
            )?;
            emit_map(&map, out, "")?;
            let min_of = |iy: usize| map.p_u0[iy].iter().copied().fold(1.0, f64::min);
            let last = map.grid.rows() - 1;
            Ok(format!(
                "conditional-rabi: min_p_u0(eps_l={})={:.3} min_p_u0(eps_l={})={:.3}",
                fmt_sig(map.grid.y_value(0).unwrap_or(0.0)),
                min_of(0),
                fmt_sig(map.grid.y_value(last).unwrap_or(0.0)),
                min_of(last)
            ))
        }
        "two-pulse" => {
            let c = &config.two_pulse;
            let map = run_two_pulse(&setup, &c.w1.axis("W1", "ps")?, &c.w2.axis("W2", "ps")?)?;
            emit_map(&map, out, "")?;
            Ok(match two_pulse_metrics(&map) {
                Ok(m) => format!(
                    "two-pulse: max_row_std_p_l0={:.4} phase(p_u0,p_l0)={:.3} rad at W1={}",
                    m.max_row_std_l,
                    m.phase_opposition,
                    fmt_sig(m.column_w1)
                ),
                Err(e) => format!("two-pulse: metrics unavailable ({e})"),
            })
        }
        "tomography" => {
            svg_only_maps()?;
            let run = run_cnot_tomography(
                &setup,
                &config.tomography.w.axis("W_I", "ps")?,
                config.prep_mode()?,
            )?;
            write_file(&out.path, &run.d.to_long_csv())?;
            write_file(&out.sibling("_matrix", "csv"), &run.d.to_matrix_csv())?;
            write_file(&out.sibling("_traces", "csv"), &run.traces_csv())?;
            Ok(format!(
                "cnot_min={:.3} w_op={:.2} ps prep_u={:.2} ps prep_l={:.2} ps",
                cnot_success_min(&run.d),
                run.operating_width,
                run.prep.upper,
                run.prep.lower
            ))
        }
        "fidelity-vs-j" => {
            svg_only_maps()?;
            let c = &config.fidelity;
            let curve = run_fidelity_vs_j(&setup, &c.j_uev, c.w_max_ps, c.w_step_ps)?;
            write_file(&out.path, &curve.to_csv())?;
            let mut s = String::new();
            for (k, j) in curve.j_values.iter().enumerate() {
                if k > 0 {
                    s.push(' ');
                }
                let _ = write!(
                    s,
                    "F(J={})={:.3} F'(J={})={:.3}",
                    fmt_sig(*j),
                    curve.f[k],
                    fmt_sig(*j),
                    curve.f_prime[k]
                );
            }
            Ok(s)
        }
        "lzs" => {
            let c = &config.lzs;
            let sweep = if c.mode == "detuning" {
                LzsSweep::Detuning {
                    eps_l: c.eps_l.axis("eps_L", "ueV")?,
                    amplitude: c.amplitude_uev,
                }
            } else {
                LzsSweep::Amplitude(c.a2.axis("A2", "ueV")?)
            };
            let map = run_lzs_control(&setup, &sweep, &c.w1.axis("W1", "ps")?)?;
            emit_map(&map, out, "")?;
            Ok(format!(
                "lzs: mode={} rows={} cols={} min_p_l0={:.3}",
                c.mode,
                map.grid.rows(),
                map.grid.x.len(),
                map_min(&map.p_l0)
            ))
        }
        "controlled-universal" => {
            let c = &config.controlled_universal;
            let map = run_controlled_universal(
                &setup,
                &c.eps_u.axis("eps_U", "ueV")?,
                &c.eps_l.axis("eps_L", "ueV")?,
                c.a_u_uev,
                c.a_l_uev,
            )?;
            emit_map(&map, out, "")?;
            Ok(format!(
                "controlled-universal: min_p_u0={:.3} min_p_l0={:.3}",
                map_min(&map.p_u0),
                map_min(&map.p_l0)
            ))
        }
        "sync-scan" => {
            let c = &config.sync;
            let maps = run_sync_scan(
                &setup,
                &c.delays_ps,
                &c.eps_u.axis("eps_U", "ueV")?,
                &c.eps_l.axis("eps_L", "ueV")?,
                c.a_u_uev,
                c.a_l_uev,
            )?;
            match out.format {
                OutputFormat::Csv => write_file(&out.path, &sync_scan_csv(&maps))?,
                OutputFormat::Svg => {
                    for m in &maps {
                        emit_map(&m.map, out, &format!("_delay{}", fmt_sig(m.delay)))?;
                    }
                }
            }
            let parts: Vec<String> = maps
                .iter()
                .map(|m| {
                    format!(
                        "cross({})={:.3}",
                        fmt_sig(m.delay),
                        cross_dependence(&m.map)
                    )
                })
                .collect();
            Ok(format!("sync-scan: {}", parts.join(" ")))
        }
        "fit" => {
            svg_only_maps()?;
            let path = PathBuf::from(&config.fit.input);
            if config.fit.input.is_empty() {
                return Err(CliError::Usage("fit needs an input CSV (--input)".into()));
            }
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(path.clone(), e))?;
            let samples = read_samples(&text, &config.fit.column)?;
            let fit = fit_rabi(&samples, None)?;
            let mut t = CsvTable::new(&RabiFit::CSV_HEADER);
            t.row(fit.csv_row());
            write_file(&out.path, &t.finish())?;
            Ok(format!(
                "fit: freq={:.4} GHz t2_star={} ps a0={:.3} b0={:.3} rms={:.2e}",
                fit.freq,
                fmt_sig(fit.t2_star),
                fit.a0,
                fit.b0,
                fit.residual_rms
            ))
        }
        "waveform" => {
            svg_only_maps()?;
            let s = build_schedule(config)?;
            write_file(&out.path, &s.waveform_csv(config.schedule.sample_ps))?;
            Ok(format!(
                "waveform: kind={} total={} ps",
                config.schedule.kind,
                fmt_sig(s.total_duration)
            ))
        }
        "trajectory" => {
            svg_only_maps()?;
            let s = build_schedule(config)?;
            let params = setup.params;
            let w0 = to_real_form(&thermal_initial_state(&params, s.eps_u0, s.eps_l0)?);
            let mut cfg = setup.cfg;
            cfg.record_stride = ((config.schedule.sample_ps / cfg.dt).round() as usize).max(1);
            let (_, traj) = evolve_real(&w0, &s, &params, &setup.dec, &cfg)?;
            let mut t = CsvTable::new(&["t_ps", "p_u0", "p_l0"]);
            for (time, p) in traj.times.iter().zip(&traj.states) {
                t.row([fmt_sig(*time), fmt_sig(p.p_u0), fmt_sig(p.p_l0)]);
            }
            write_file(&out.path, &t.finish())?;
            let (pu, pl) = traj.states.last().map_or((1.0, 1.0), |p| (p.p_u0, p.p_l0));
            Ok(format!(
                "trajectory: kind={} samples={} final p_u0={pu:.3} p_l0={pl:.3}",
                config.schedule.kind,
                traj.times.len(),
            ))
        }
        _ => unreachable!("subcommand list checked above"),
    }
}

fn map_min(field: &[Vec<f64>]) -> f64 {
    field.iter().flatten().copied().fold(1.0, f64::min)
}

/// CSV to `out.path`, or one SVG per field next to it.
fn emit_map(map: &ProbabilityMap, out: &OutputSpec, suffix: &str) -> CliResult<()> {
    match out.format {
        OutputFormat::Csv => write_file(&out.path, &map.to_csv()),
        OutputFormat::Svg => {
            for field in Field::BOTH {
                let svg = render_svg(map, field, &out.svg)?;
                write_file(
                    &out.sibling(&format!("{suffix}_{}", field.name()), "svg"),
                    &svg,
                )?;
            }
            Ok(())
        }
    }
}

/// `(x, y)` pairs from a CSV with x in the first column and y in `column`
/// (or the second column when no header names it).
fn read_samples(text: &str, column: &str) -> CliResult<Vec<(f64, f64)>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::InsufficientData("input CSV is empty".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    if header.contains(&"y") {
        return Err(Error::InsufficientData("fit needs a 1-D sweep, got a 2-D map".into()).into());
    }
    let iy = match header.iter().position(|h| *h == column) {
        Some(i) => i,
        None if header.len() == 2 => 1,
        None => {
            return Err(
                Error::InsufficientData(format!("input CSV has no `{column}` column")).into(),
            )
        }
    };
    lines
        .enumerate()
        .map(|(k, line)| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let num = |i: usize| -> CliResult<f64> {
                fields.get(i).and_then(|f| f.parse().ok()).ok_or_else(|| {
                    Error::InsufficientData(format!("input CSV row {}: bad number", k + 2)).into()
                })
            };
            Ok((num(0)?, num(iy)?))
        })
        .collect()
}

fn build_schedule(config: &RunConfig) -> CliResult<Schedule> {
    let setup = config.setup();
    let b = setup.builder();
    let sc = &config.schedule;
    let s = match sc.kind.as_str() {
        "rabi" => b.rabi(sc.w1_ps)?,
        "two-pulse" => b.two_pulse(sc.w1_ps, sc.w2_ps)?,
        "tomography" => {
            let (_, prep) = locate_3pi(&setup, config.prep_mode()?)?;
            b.tomography(config.schedule_label()?, sc.w1_ps, prep)?
        }
        "lzs" => b.lzs(sc.amplitude_uev, sc.w1_ps)?,
        "controlled-universal" => b.controlled_universal(sc.a_u_uev, sc.a_l_uev)?,
        "sync" => b.sync(sc.delay_ps, sc.a_u_uev, sc.a_l_uev)?,
        other => {
            return Err(ConfigError::Validation {
                key: "kind".into(),
                message: format!("unknown schedule kind `{other}`"),
            }
            .into())
        }
    };
    Ok(s)
}

#[derive(Debug, Parser)]
#[command(
    name = "dqdsim",
    version,
    about = "Coupled charge-qubit simulator",
    disable_help_subcommand = true
)]
struct Args {
    /// One of the subcommands listed in the usage text.
    subcommand: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long, default_value = "gray")]
    colormap: String,
    #[arg(long, default_value_t = 4)]
    cell_px: u32,
    #[arg(long)]
    parallel: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    j: Option<Vec<f64>>,
    #[arg(long = "set")]
    set: Vec<String>,
    #[arg(long)]
    input: Option<PathBuf>,
}

/// Entry point of the binary: parses `args` (program name first), runs the
/// subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match prepare(&args) {
        Ok((sub, config, out)) => match args.parallel {
            None => dispatch(&sub, &config, &out),
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| dispatch(&sub, &config, &out)),
                Err(e) => {
                    eprintln!("error: cannot start {n} worker threads: {e}");
                    2
                }
            },
        },
        Err(e) => {
            e.report();
            e.exit_code()
        }
    }
}

fn prepare(args: &Args) -> CliResult<(String, RunConfig, OutputSpec)> {
    let sub = args
        .subcommand
        .clone()
        .ok_or_else(|| CliError::Usage("missing subcommand".into()))?;
    if !SUBCOMMANDS.contains(&sub.as_str()) {
        return Err(CliError::Usage(format!("unknown subcommand `{sub}`")));
    }
    if args.parallel == Some(0) {
        return Err(CliError::Usage("--parallel must be at least 1".into()));
    }
    let mut config = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(p.clone(), e))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for s in &args.set {
        config.set(s)?;
    }
    if let Some(j) = &args.j {
        config.fidelity.j_uev = j.clone();
        config.validate()?;
    }
    if let Some(input) = &args.input {
        config.fit.input = input.to_string_lossy().into_owned();
    }
    let format = match args.format.as_str() {
        "csv" => OutputFormat::Csv,
        "svg" => OutputFormat::Svg,
        other => return Err(CliError::Usage(format!("unknown format `{other}`"))),
    };
    let colormap: Colormap = args.colormap.parse().map_err(CliError::Usage)?;
    if args.cell_px == 0 {
        return Err(CliError::Usage("--cell-px must be at least 1".into()));
    }
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{sub}.{}", format.extension())));
    Ok((
        sub,
        config,
        OutputSpec {
            path,
            format,
            svg: SvgOptions {
                colormap,
                cell_px: args.cell_px,
            },
        },
    ))
}
