//! `jerkrepro` command-line front end.
//!
//! Exit status: 0 on success, 1 for I/O or data failures, 2 for usage and
//! validation errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ingest::{parse_spice_export, parse_trace_csv, write_series_csv, CsvOptions};
use crate::integrate::{simulate, IntegratorConfig, Method, Signal, DEFAULT_STEP};
use crate::jerk::{JerkParams, NonlinearitySign, SystemState, DEFAULT_A, DEFAULT_TIME_SCALE_S};
use crate::metrics::{NrmseVariant, DEFAULT_THRESHOLD, DEFAULT_WINDOWS};
use crate::report::{align_traces, score_aligned, CompareOptions, ComparisonReport};
use crate::series::{Samples, TimeSeries, UniformSeries};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data {
        stage: &'static str,
        message: String,
    },
}

impl CliError {
    fn data(stage: &'static str, err: impl std::fmt::Display) -> Self {
        CliError::Data {
            stage,
            message: err.to_string(),
        }
    }

    fn usage(err: impl std::fmt::Display) -> Self {
        CliError::Usage(err.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data { .. } => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Data { stage, message } => write!(f, "error: {stage}: {message}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Units for the time column written by `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    Dimensionless,
    Seconds,
}

/// Input trace format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum TraceFormat {
    /// Tab in the first line selects SPICE export, otherwise CSV with an
    /// optional header row.
    #[default]
    Auto,
    Csv,
    Spice,
}

/// Declarative run configuration (JSON). Every field is optional; unknown
/// keys are rejected. Command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub integrator: IntegratorSection,
    pub metrics: MetricsSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub a: f64,
    pub sign: NonlinearitySign,
    pub time_scale_s: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            a: DEFAULT_A,
            sign: NonlinearitySign::Minus,
            time_scale_s: DEFAULT_TIME_SCALE_S,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: Method,
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_state: [f64; 3],
    pub output_points: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            method: d.method,
            t_start: d.t_start,
            t_end: d.t_end,
            step: DEFAULT_STEP,
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            initial_state: d.initial_state.to_array(),
            output_points: d.output_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub windows: usize,
    pub threshold: f64,
    pub variant: NrmseVariant,
    pub grid_points: usize,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            windows: DEFAULT_WINDOWS,
            threshold: DEFAULT_THRESHOLD,
            variant: NrmseVariant::SimulatedMean,
            grid_points: 4700,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub signal: Signal,
    pub time_unit: TimeUnit,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::data("config", format!("cannot open {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn params(&self) -> crate::Result<JerkParams> {
        JerkParams::new(self.model.a, self.model.sign, self.model.time_scale_s)
    }

    pub fn integrator(&self) -> crate::Result<IntegratorConfig> {
        let i = &self.integrator;
        let cfg = IntegratorConfig {
            method: i.method,
            t_start: i.t_start,
            t_end: i.t_end,
            step: i.step,
            rel_tol: i.rel_tol,
            abs_tol: i.abs_tol,
            initial_state: SystemState::from_array(i.initial_state),
            output_points: i.output_points,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn compare_options(&self) -> crate::Result<CompareOptions> {
        let m = &self.metrics;
        if !(m.threshold.is_finite() && m.threshold > 0.0) {
            return Err(Error::Domain(format!(
                "threshold must be > 0 (got {})",
                m.threshold
            )));
        }
        if m.windows == 0 {
            return Err(Error::Domain("windows must be >= 1".to_string()));
        }
        if m.grid_points < 2 {
            return Err(Error::Domain(format!(
                "grid points must be >= 2 (got {})",
                m.grid_points
            )));
        }
        if m.windows > m.grid_points {
            return Err(Error::Domain(format!(
                "windows ({}) must not exceed grid points ({})",
                m.windows, m.grid_points
            )));
        }
        Ok(CompareOptions {
            grid_points: m.grid_points,
            windows: m.windows,
            threshold: m.threshold,
            variant: m.variant,
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "jerkrepro",
    version,
    about = "Simulate the quadratic jerk system and score trace reproducibility"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the jerk system and write one state component as a `t,v` CSV trace.
    Simulate(SimulateArgs),
    /// Score candidate traces against a measured trace (full and cumulative NRMSE).
    Compare(CompareArgs),
    /// Report each candidate's prediction horizon against a measured trace.
    Horizon(HorizonArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bifurcation parameter A.
    #[arg(long)]
    pub a: Option<f64>,
    /// Sign of the quadratic term: minus or plus.
    #[arg(long)]
    pub sign: Option<NonlinearitySign>,
    /// Seconds per dimensionless time unit (R·C).
    #[arg(long)]
    pub time_scale: Option<f64>,
    /// Initial state as `x,xd,xdd`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_state)]
    pub ic: Option<SystemState>,
    /// euler, rk4 or rk45.
    #[arg(long)]
    pub method: Option<Method>,
    /// Step size (initial step for rk45).
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub t_start: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Number of output samples, endpoints included.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// State component to write: x, xd or xdd.
    #[arg(long)]
    pub signal: Option<Signal>,
    /// Time column unit.
    #[arg(long, value_enum)]
    pub time_unit: Option<TimeUnit>,
    /// Output CSV path (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceInputs {
    /// Measured (experimental) trace.
    #[arg(long)]
    pub measured: PathBuf,
    /// Candidate trace as NAME=FILE; repeatable.
    #[arg(long = "candidate", required = true, value_parser = parse_candidate)]
    pub candidates: Vec<(String, PathBuf)>,
    /// Input format for all traces.
    #[arg(long, value_enum, default_value_t = TraceFormat::Auto)]
    pub format: TraceFormat,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of cumulative windows.
    #[arg(long)]
    pub windows: Option<usize>,
    /// Points in the common resampling grid.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// NRMSE threshold for the prediction horizon.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Denominator mean: simulated-mean or measured-mean.
    #[arg(long)]
    pub variant: Option<NrmseVariant>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CompareArgs {
    #[command(flatten)]
    pub inputs: TraceInputs,
    /// JSON report path (printed to standard output if omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-window CSV path. Defaults to the report path with a
    /// `.windows.csv` extension when --report is given.
    #[arg(long)]
    pub windows_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct HorizonArgs {
    #[command(flatten)]
    pub inputs: TraceInputs,
    /// Optional JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_state(s: &str) -> std::result::Result<SystemState, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,xd,xdd (got {s:?})"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| format!("cannot parse {p:?} as a number"))?;
    }
    Ok(SystemState::from_array(v))
}

fn parse_candidate(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected NAME=FILE (got {s:?})")),
    }
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Horizon(args) => cmd_horizon(&args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn base_config(path: &Option<PathBuf>) -> CliResult<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes)
        .map_err(|e| CliError::data("write", format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut cfg = base_config(&args.config)?;
    if let Some(a) = args.a {
        cfg.model.a = a;
    }
    if let Some(sign) = args.sign {
        cfg.model.sign = sign;
    }
    if let Some(tau) = args.time_scale {
        cfg.model.time_scale_s = tau;
    }
    let i = &mut cfg.integrator;
    if let Some(ic) = args.ic {
        i.initial_state = ic.to_array();
    }
    if let Some(m) = args.method {
        i.method = m;
    }
    if let Some(h) = args.h {
        i.step = h;
    }
    if let Some(t) = args.t_start {
        i.t_start = t;
    }
    if let Some(t) = args.t_end {
        i.t_end = t;
    }
    if let Some(n) = args.points {
        i.output_points = n;
    }
    if let Some(r) = args.rtol {
        i.rel_tol = r;
    }
    if let Some(a) = args.atol {
        i.abs_tol = a;
    }
    if let Some(s) = args.signal {
        cfg.output.signal = s;
    }
    if let Some(u) = args.time_unit {
        cfg.output.time_unit = u;
    }

    let params = cfg.params().map_err(CliError::usage)?;
    let integrator = cfg.integrator().map_err(CliError::usage)?;
    let trajectory = simulate(&integrator, &params).map_err(|e| CliError::data("simulate", e))?;
    let mut series = trajectory.into_channel(cfg.output.signal);
    if cfg.output.time_unit == TimeUnit::Seconds {
        let meta = series.meta().clone();
        series = UniformSeries::new(
            params.to_seconds(series.t0()),
            params.to_seconds(series.dt()),
            series.values().to_vec(),
            crate::series::SeriesMeta {
                unit: "s".to_string(),
                ..meta
            },
        )
        .map_err(|e| CliError::data("simulate", e))?;
    }
    let bytes = write_series_csv(&series);
    let summary = format!(
        "simulated {} points of {} over t = [{}, {}] ({}, h = {}, a = {}, sign = {})",
        series.values().len(),
        cfg.output.signal.name(),
        series.t0(),
        series.end(),
        integrator.method,
        integrator.step,
        params.a(),
        params.sign(),
    );
    match &args.out {
        Some(path) => {
            write_file(path, &bytes)?;
            println!("{summary} -> {}", path.display());
        }
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| CliError::data("write", e))?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

/// Reads one trace file, tagging it with `id`.
pub fn read_trace(path: &Path, format: TraceFormat, id: &str) -> CliResult<TimeSeries> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::data("ingest", format!("cannot open {}: {e}", path.display())))?;
    let format = match format {
        TraceFormat::Auto => {
            let first = bytes.split(|&b| b == b'\n').next().unwrap_or(&[]);
            if first.contains(&b'\t') {
                TraceFormat::Spice
            } else {
                TraceFormat::Csv
            }
        }
        f => f,
    };
    let parsed = match format {
        TraceFormat::Spice => parse_spice_export(&bytes),
        _ => {
            let first_field = bytes
                .split(|&b| b == b'\n' || b == b',')
                .next()
                .map(|f| String::from_utf8_lossy(f).trim().to_string())
                .unwrap_or_default();
            let has_header = !first_field.is_empty() && first_field.parse::<f64>().is_err();
            parse_trace_csv(&bytes, &CsvOptions::default().with_header(has_header))
        }
    };
    let mut series =
        parsed.map_err(|e| CliError::data("ingest", format!("{}: {e}", path.display())))?;
    series.meta_mut().source_id = id.to_string();
    Ok(series)
}

fn analyse(inputs: &TraceInputs) -> CliResult<ComparisonReport> {
    let mut cfg = base_config(&inputs.config)?;
    if let Some(w) = inputs.windows {
        cfg.metrics.windows = w;
    }
    if let Some(n) = inputs.grid_points {
        cfg.metrics.grid_points = n;
    }
    if let Some(t) = inputs.threshold {
        cfg.metrics.threshold = t;
    }
    if let Some(v) = inputs.variant {
        cfg.metrics.variant = v;
    }
    let options = cfg.compare_options().map_err(CliError::usage)?;

    let mut names = std::collections::BTreeSet::new();
    for (name, _) in &inputs.candidates {
        if !names.insert(name.as_str()) {
            return Err(CliError::usage(format!(
                "duplicate candidate name {name:?}"
            )));
        }
    }

    let measured = read_trace(&inputs.measured, inputs.format, "measured")?;
    let candidates = inputs
        .candidates
        .iter()
        .map(|(name, path)| Ok((name.clone(), read_trace(path, inputs.format, name)?)))
        .collect::<CliResult<Vec<_>>>()?;

    let aligned = align_traces(&measured, &candidates, options.grid_points)
        .map_err(|e| CliError::data("align", e))?;
    score_aligned(&aligned, &options).map_err(|e| CliError::data("score", e))
}

fn default_windows_path(report: &Path) -> PathBuf {
    report.with_extension("windows.csv")
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    let report = analyse(&args.inputs)?;
    let json = report.to_json();
    match &args.report {
        Some(path) => {
            write_file(path, json.as_bytes())?;
            let csv_path = args
                .windows_csv
                .clone()
                .unwrap_or_else(|| default_windows_path(path));
            write_file(&csv_path, report.windows_csv().as_bytes())?;
            println!(
                "grid: {} points on [{}, {}]",
                report.grid.n, report.grid.t0, report.grid.t1
            );
            for c in &report.candidates {
                println!("{}\tnrmse = {}", c.id, c.full_nrmse);
            }
            println!("reference: {}", report.reference_id);
        }
        None => {
            if let Some(csv_path) = &args.windows_csv {
                write_file(csv_path, report.windows_csv().as_bytes())?;
            }
            print!("{json}");
        }
    }
    Ok(())
}

pub fn cmd_horizon(args: &HorizonArgs) -> CliResult<()> {
    let report = analyse(&args.inputs)?;
    if let Some(path) = &args.report {
        write_file(path, report.to_json().as_bytes())?;
    }
    println!("threshold: {}", report.threshold);
    for c in &report.candidates {
        let status = if c.horizon.exceeded {
            "exceeded"
        } else {
            "not exceeded"
        };
        println!(
            "{}\thorizon = {}\tspan = {}\t({status})",
            c.id, c.horizon.time, c.horizon.span
        );
    }
    if let Some(w) = report.horizon_winner() {
        println!("winner: {}", w.id);
    }
    Ok(())
}
