//! The `nvtherm` command line.
//!
//! Every workflow reads a [`RunConfig`], writes its artifacts into the
//! `--out` directory from the calling thread, and reports a one-line summary.
//! Failures print a single JSON object on standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigSource, Diagnostic, Mode, RunConfig};
use crate::error::{Error, Result};
use crate::fitting::{detect_dips, extract_linewidth, fit_auto, FitOptions, FitResult, LinewidthEstimate};
use crate::lineshape::{ensemble_spectrum, synthesize_measurement, StrainDistribution};
use crate::oracle::{oracle_ensemble_spectrum, OracleRates};
use crate::sensitivity::GeneratorKind;
use crate::sensitivity::{
    estimate_temperature, slope_sensitivity, sweep, NoiseBudget, SensitivityReport, TemperatureEstimate,
};
use crate::spectrum::{fmt17, Spectrum, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "nvtherm",
    version,
    about = "CW-ODMR thermometry with RF-dressed NV spin states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a (optionally noisy) spectrum.
    Simulate(RunArgs),
    /// Fit a spectrum and extract linewidths.
    Fit(RunArgs),
    /// Fit, then compute temperature sensitivities and an optional temperature.
    Sensitivity(RunArgs),
    /// Run a parameter sweep.
    Sweep(RunArgs),
    /// Compare the closed-form lineshape with the Lindblad steady state.
    OracleCheck(RunArgs),
    /// Check a config without running it.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "nvtherm-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dotted-path override, e.g. `damping.gamma_b=0.8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// What a finished command reports.
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
}

#[derive(Debug)]
pub enum CliError {
    Invalid(Vec<Diagnostic>),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Run(Error::Config { .. }) => EXIT_CONFIG,
            CliError::Run(_) => EXIT_FAILURE,
        }
    }

    /// The single-line JSON error record.
    pub fn to_json_line(&self) -> String {
        let value = match self {
            CliError::Invalid(diags) => json!({
                "status": "error",
                "kind": "config",
                "message": format!("{} configuration problem(s)", diags.len()),
                "diagnostics": diags,
            }),
            CliError::Run(e) => {
                let mut v = json!({ "status": "error", "kind": e.kind(), "message": e.to_string() });
                if let Error::Config { key, line, .. } = e {
                    v["key"] = json!(key);
                    v["line"] = json!(line);
                }
                v
            }
        };
        value.to_string()
    }
}

/// Parses `args` (including the program name) and runs the command,
/// printing to standard output and error. Returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            outcome.exit_code
        }
        Err(e) => {
            if let CliError::Invalid(diags) = &e {
                for d in diags {
                    println!("{d}");
                }
            }
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    let (args, mode) = match command {
        Command::Validate(v) => return validate(&v.config, &v.set),
        Command::Simulate(a) => (a, Mode::Simulate),
        Command::Fit(a) => (a, Mode::Fit),
        Command::Sensitivity(a) => (a, Mode::Sensitivity),
        Command::Sweep(a) => (a, Mode::Sweep),
        Command::OracleCheck(a) => (a, Mode::OracleCheck),
    };
    let config = load(args, mode)?;
    let out = Output::new(&args.out)?;
    let outcome = match mode {
        Mode::Simulate => run_simulate(&config, out)?,
        Mode::Fit => run_fit(&config, out)?,
        Mode::Sensitivity => run_sensitivity(&config, out)?,
        Mode::Sweep => run_sweep(&config, out)?,
        Mode::OracleCheck => run_oracle_check(&config, out)?,
    };
    Ok(outcome)
}

/// Reads the config, applies overrides and the subcommand's mode.
pub fn load(args: &RunArgs, mode: Mode) -> Result<RunConfig, CliError> {
    let mut source = ConfigSource::load(&args.config)?;
    source.apply_overrides(&args.set)?;
    crate::config::apply_override(&mut source.doc, &format!("mode=\"{}\"", mode.name()))?;
    if let Some(seed) = args.seed {
        crate::config::apply_override(&mut source.doc, &format!("seed={seed}"))?;
    }
    match source.diagnose() {
        (Some(config), diags) if diags.is_empty() => Ok(config),
        (_, diags) => Err(CliError::Invalid(diags)),
    }
}

fn validate(path: &Path, overrides: &[String]) -> Result<Outcome, CliError> {
    let mut source = ConfigSource::load(path)?;
    source.apply_overrides(overrides)?;
    let (_, diags) = source.diagnose();
    if diags.is_empty() {
        Ok(Outcome {
            summary: format!("valid: {}", path.display()),
            files: Vec::new(),
            exit_code: EXIT_OK,
        })
    } else {
        Err(CliError::Invalid(diags))
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        let path = self.dir.join(name);
        std::fs::File::create(&path)?.write_all(&buf)?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write(name, |buf| {
            buf.extend_from_slice(text.as_bytes());
            buf.push(b'\n');
            Ok(())
        })
    }

    fn finish(self, summary: String, exit_code: i32) -> Outcome {
        Outcome {
            summary,
            files: self.files,
            exit_code,
        }
    }
}

fn document(kind: &str, body: impl Serialize) -> Result<String> {
    let mut value = serde_json::to_value(body)?;
    if let serde_json::Value::Object(map) = &mut value {
        map.insert("schema_version".into(), SCHEMA_VERSION.into());
        map.insert("kind".into(), kind.into());
    }
    Ok(serde_json::to_string_pretty(&value)?)
}

/// The spectrum a config describes, with shot noise when `noise` is set.
pub fn simulate(config: &RunConfig) -> Result<Spectrum> {
    let op = config.budget.operating_point(config.damping, config.laser_power_mw);
    let env = &config.environment;
    let strain = StrainDistribution::new(env.ex, config.strain.sigma_ex, config.strain.nodes)?;
    let grid = config.grid.frequencies();
    let clean = match config.generator {
        GeneratorKind::ClosedForm => ensemble_spectrum(env, &config.drive, &grid, op.damping, op.alpha, &strain)?,
        GeneratorKind::Lindblad => {
            let rates = config
                .oracle
                .rates
                .unwrap_or_else(|| OracleRates::radiative(op.damping));
            oracle_ensemble_spectrum(env, &config.drive, &grid, rates, op.alpha, &strain)?
        }
    };
    let mut spec = match config.noise {
        Some(n) => synthesize_measurement(&clean, op.photon_rate, n.dwell_s, config.seed)?,
        None => clean,
    };
    if !config.metadata.is_empty() {
        spec = spec.with_metadata("notes", &config.metadata);
    }
    Ok(spec)
}

fn count_dips(spec: &Spectrum) -> usize {
    match detect_dips(spec, usize::MAX) {
        Err(Error::PeakDetection { found, .. }) => found,
        _ => 0,
    }
}

fn run_simulate(config: &RunConfig, mut out: Output) -> Result<Outcome> {
    let spec = simulate(config)?;
    out.write("spectrum.csv", |buf| spec.write_csv(buf))?;
    out.text("spectrum.json", &spec.to_json()?)?;
    let min = spec.signal.iter().cloned().fold(f64::INFINITY, f64::min);
    let summary = format!(
        "simulate: {} points, {} dips, min signal {:.6}, wrote {}",
        spec.len(),
        count_dips(&spec),
        min,
        out.dir.join("spectrum.csv").display()
    );
    Ok(out.finish(summary, EXIT_OK))
}

fn input_spectrum(config: &RunConfig) -> Result<Spectrum> {
    match &config.input {
        Some(path) => Spectrum::load_csv(path),
        None => simulate(config),
    }
}

struct FitArtifacts {
    fit: FitResult,
    linewidths: Vec<LinewidthEstimate>,
    temperature: Option<TemperatureEstimate>,
}

fn fit_and_read(config: &RunConfig) -> Result<FitArtifacts> {
    let spec = input_spectrum(config)?;
    let model = config.effective_fit_model();
    let opts = FitOptions {
        starts: config.fit.starts,
        ..FitOptions::default()
    };
    let fit = fit_auto(&spec, &model, &opts)?;
    let linewidths = extract_linewidth(&fit, &model)?;
    let temperature = match &config.calibration {
        Some(cal) => {
            let reference = FitResult::from_json(&std::fs::read_to_string(&cal.fit)?)?;
            Some(estimate_temperature(
                &fit,
                &reference,
                cal.temperature,
                config.environment.dd_dt,
            )?)
        }
        None => None,
    };
    Ok(FitArtifacts {
        fit,
        linewidths,
        temperature,
    })
}

fn fwhm_list(linewidths: &[LinewidthEstimate]) -> String {
    let parts: Vec<String> = linewidths
        .iter()
        .map(|l| l.fwhm.map_or("unresolved".to_string(), |w| format!("{w:.4}")))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn temperature_text(t: &Option<TemperatureEstimate>) -> String {
    t.as_ref()
        .map(|t| format!(", T {:.4} +/- {:.4} K", t.temperature, t.uncertainty))
        .unwrap_or_default()
}

fn run_fit(config: &RunConfig, mut out: Output) -> Result<Outcome> {
    let a = fit_and_read(config)?;
    out.text("fit.json", &a.fit.to_json()?)?;
    #[derive(Serialize)]
    struct Body<'a> {
        linewidths: &'a [LinewidthEstimate],
        temperature: &'a Option<TemperatureEstimate>,
    }
    out.text(
        "linewidths.json",
        &document(
            "linewidths",
            Body {
                linewidths: &a.linewidths,
                temperature: &a.temperature,
            },
        )?,
    )?;
    let summary = format!(
        "fit: {} ({}, {} iterations), fwhm {} MHz, rms {:.3e}{}",
        if a.fit.converged { "converged" } else { "not converged" },
        a.fit.termination,
        a.fit.iterations,
        fwhm_list(&a.linewidths),
        a.fit.residual_rms,
        temperature_text(&a.temperature)
    );
    Ok(out.finish(summary, EXIT_OK))
}

fn run_sensitivity(config: &RunConfig, mut out: Output) -> Result<Outcome> {
    let a = fit_and_read(config)?;
    let op = config.budget.operating_point(config.damping, config.laser_power_mw);
    let budget = NoiseBudget {
        photon_rate: op.photon_rate,
        alpha: op.alpha,
        laser: None,
    };
    let report = slope_sensitivity(&a.fit, &budget, config.environment.dd_dt)?;
    out.text("fit.json", &a.fit.to_json()?)?;
    #[derive(Serialize)]
    struct Body<'a> {
        report: &'a SensitivityReport,
        linewidths: &'a [LinewidthEstimate],
        temperature: &'a Option<TemperatureEstimate>,
    }
    out.text(
        "sensitivity.json",
        &document(
            "sensitivity",
            Body {
                report: &report,
                linewidths: &a.linewidths,
                temperature: &a.temperature,
            },
        )?,
    )?;
    let eta_lw = report.eta_linewidth.map_or("n/a".to_string(), |v| format!("{v:.4e}"));
    let summary = format!(
        "sensitivity: fwhm {} MHz, eta_slope {:.4e} K/rtHz, eta_linewidth {} K/rtHz{}",
        fwhm_list(&a.linewidths),
        report.eta_slope,
        eta_lw,
        temperature_text(&a.temperature)
    );
    Ok(out.finish(summary, EXIT_OK))
}

fn run_sweep(config: &RunConfig, mut out: Output) -> Result<Outcome> {
    let sweep_config = config.sweep_config()?;
    let table = sweep(&sweep_config, &config.budget)?;
    out.write("sweep.csv", |buf| table.write_csv(buf))?;
    out.text("sweep.json", &table.to_json()?)?;
    let failed = table.rows.iter().filter(|r| !r.ok()).count();
    let best = table
        .rows
        .iter()
        .filter_map(|r| r.eta_slope.map(|e| (e, r)))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let best_text = match best {
        Some((eta, row)) => {
            let at: Vec<String> = table
                .axis_names
                .iter()
                .zip(&row.axis_values)
                .map(|(n, v)| format!("{n}={v}"))
                .collect();
            let fwhm = row.fwhm.map_or("n/a".to_string(), |w| format!("{w:.4}"));
            format!(
                ", best eta_slope {eta:.4e} K/rtHz at {} (fwhm {fwhm} MHz)",
                at.join(" ")
            )
        }
        None => String::new(),
    };
    let summary = format!("sweep: {} points, {} failed{}", table.rows.len(), failed, best_text);
    Ok(out.finish(summary, EXIT_OK))
}

/// Agreement between the closed-form lineshape and the Lindblad reference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    /// RMS of the depletion difference over the RMS depletion.
    pub relative_rms: f64,
    /// Largest depletion difference over the peak depletion.
    pub max_relative_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub points: usize,
}

pub fn oracle_check(config: &RunConfig) -> Result<(OracleReport, Spectrum, Spectrum)> {
    let op = config.budget.operating_point(config.damping, config.laser_power_mw);
    let env = &config.environment;
    let strain = StrainDistribution::new(env.ex, config.strain.sigma_ex, config.strain.nodes)?;
    let grid = config.grid.frequencies();
    let rates = config
        .oracle
        .rates
        .unwrap_or_else(|| OracleRates::radiative(op.damping));
    let closed = ensemble_spectrum(env, &config.drive, &grid, rates.damping(), op.alpha, &strain)?;
    let reference = oracle_ensemble_spectrum(env, &config.drive, &grid, rates, op.alpha, &strain)?;
    let (mut diff2, mut ref2, mut max_diff, mut max_ref) = (0.0, 0.0, 0.0f64, 0.0f64);
    for (a, b) in closed.signal.iter().zip(&reference.signal) {
        let (da, db) = (1.0 - a, 1.0 - b);
        diff2 += (da - db) * (da - db);
        ref2 += db * db;
        max_diff = max_diff.max((da - db).abs());
        max_ref = max_ref.max(db.abs());
    }
    if ref2 == 0.0 {
        return Err(Error::NoSensitivity);
    }
    let relative_rms = (diff2 / ref2).sqrt();
    let report = OracleReport {
        relative_rms,
        max_relative_deviation: max_diff / max_ref,
        tolerance: config.oracle.tolerance,
        passed: relative_rms < config.oracle.tolerance,
        points: grid.len(),
    };
    Ok((report, closed, reference))
}

fn run_oracle_check(config: &RunConfig, mut out: Output) -> Result<Outcome> {
    let (report, closed, reference) = oracle_check(config)?;
    out.write("oracle_check.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["frequency_mhz", "closed_form", "lindblad"])?;
        for i in 0..closed.len() {
            w.write_record([
                fmt17(closed.frequencies[i]),
                fmt17(closed.signal[i]),
                fmt17(reference.signal[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.text("oracle_check.json", &document("oracle_check", &report)?)?;
    let summary = format!(
        "oracle-check: {} relative RMS {:.3e}, max relative deviation {:.3e} (tolerance {})",
        if report.passed { "PASS" } else { "FAIL" },
        report.relative_rms,
        report.max_relative_deviation,
        report.tolerance
    );
    let code = if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok(out.finish(summary, code))
}
