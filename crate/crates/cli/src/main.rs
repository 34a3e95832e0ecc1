//! Configuration-driven experiment runner.
//!
//! `sepsim run` executes one experiment described by a JSON config and
//! writes a JSON or CSV report; `sepsim sweep` reruns the experiment over a
//! list of values for one numeric config field and writes one CSV row per
//! value. Exit codes: 0 success, 2 validation failure, 3 numerical
//! degeneracy (annihilated states, excluded absorptions).

mod config;
mod experiments;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use config::ExperimentConfig;
use experiments::run_experiment;
use report::{render_json, render_run_csv, render_sweep_row, Report, SWEEP_HEADER};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or semantically invalid configuration (exit 2).
    Validation(String),
    /// Numerical degeneracy during the experiment (exit 3).
    Degeneracy(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }

    pub fn from_core(error: sepsim_core::Error, field: &str) -> Self {
        match error {
            sepsim_core::Error::DegenerateVector { .. }
            | sepsim_core::Error::DegenerateAbsorption { .. } => {
                CliError::Degeneracy(format!("{field}: {error}"))
            }
            _ => CliError::Validation(format!("{field}: {error}")),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Degeneracy(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Degeneracy(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "sepsim",
    version,
    about = "Cluster-separability and measurement-model experiments on a discretised grid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run {
        /// Path to the JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output report path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rerun the experiment for each value of one numeric config field and
    /// write one CSV row per value, in input order.
    Sweep {
        /// Path to the JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Dotted path to a numeric field, e.g. separability.rotation_angle
        /// or registration.detectors.0.m.
        #[arg(long)]
        param: String,
        /// Comma-separated list of values.
        #[arg(long)]
        values: String,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {}", error.message());
            ExitCode::from(error.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            format,
            seed,
        } => run_command(&config, &out, format, seed),
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => sweep_command(&config, &param, &values, &out),
    }
}

fn load_config(path: &Path, seed_override: Option<u64>) -> CliResult<(ExperimentConfig, Value)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("config is not valid JSON: {e}")))?;
    if let Some(seed) = seed_override {
        match &mut value {
            Value::Object(map) => {
                map.insert("seed".into(), Value::from(seed));
            }
            _ => return Err(CliError::validation("config root must be a JSON object")),
        }
    }
    let config: ExperimentConfig = serde_json::from_value(value.clone())
        .map_err(|e| CliError::validation(format!("invalid config: {e}")))?;
    Ok((config, value))
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_output(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| {
        CliError::validation(format!("cannot write output {}: {e}", path.display()))
    })
}

fn run_command(
    config_path: &Path,
    out: &Path,
    format: Format,
    seed: Option<u64>,
) -> CliResult<()> {
    let (config, echo) = load_config(config_path, seed)?;
    let output = run_experiment(&config)?;
    let passed = output.assertions.iter().filter(|a| a.pass).count();
    let total = output.assertions.len();
    let report = Report {
        config_echo: echo,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.experiment.name().to_string(),
        metrics: output.metrics,
        assertions: output.assertions,
        timestamp: now_unix(),
    };
    let text = match format {
        Format::Json => render_json(&report),
        Format::Csv => render_run_csv(&report),
    };
    write_output(out, &text)?;
    println!(
        "{}: {passed}/{total} assertions passed, report written to {}",
        report.experiment,
        out.display()
    );
    Ok(())
}

/// Replaces the numeric leaf at a dotted path (object keys and array
/// indices) with `new`, keeping integer-typed fields integral.
fn set_numeric_path(root: &mut Value, path: &str, new: f64) -> CliResult<()> {
    let mut cursor = &mut *root;
    let segments: Vec<&str> = path.split('.').collect();
    for segment in &segments {
        cursor = match cursor {
            Value::Object(map) => map.get_mut(*segment).ok_or_else(|| {
                CliError::validation(format!("unknown parameter '{path}': no field '{segment}'"))
            })?,
            Value::Array(items) => {
                let index: usize = segment.parse().map_err(|_| {
                    CliError::validation(format!(
                        "unknown parameter '{path}': '{segment}' is not an array index"
                    ))
                })?;
                items.get_mut(index).ok_or_else(|| {
                    CliError::validation(format!(
                        "unknown parameter '{path}': index {index} out of range"
                    ))
                })?
            }
            _ => {
                return Err(CliError::validation(format!(
                    "unknown parameter '{path}': '{segment}' cannot be descended into"
                )))
            }
        };
    }
    let was_integer = cursor.is_u64() || cursor.is_i64();
    if !cursor.is_number() {
        return Err(CliError::validation(format!(
            "parameter '{path}' is not a numeric field"
        )));
    }
    *cursor = if was_integer && new.fract() == 0.0 {
        Value::from(new as i64)
    } else {
        serde_json::Number::from_f64(new)
            .map(Value::Number)
            .ok_or_else(|| CliError::validation(format!("value {new} is not a finite number")))?
    };
    Ok(())
}

fn sweep_command(config_path: &Path, param: &str, values: &str, out: &Path) -> CliResult<()> {
    let (_, base) = load_config(config_path, None)?;
    let parsed: Vec<f64> = values
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::validation(format!("values: '{s}' is not a number")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if parsed.is_empty() {
        return Err(CliError::validation("values: empty list"));
    }

    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for &value in &parsed {
        let mut mutated = base.clone();
        set_numeric_path(&mut mutated, param, value)?;
        let config: ExperimentConfig = serde_json::from_value(mutated)
            .map_err(|e| CliError::validation(format!("invalid config at {param}={value}: {e}")))?;
        let output = run_experiment(&config)?;
        csv.push_str(&render_sweep_row(param, value, &output.sweep));
    }
    write_output(out, &csv)?;
    println!(
        "sweep over {param}: {} rows written to {}",
        parsed.len(),
        out.display()
    );
    Ok(())
}
