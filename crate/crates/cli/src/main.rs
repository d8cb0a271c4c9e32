//! `memxbar`: crossbar dot-product simulations from a TOML config.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 timeout.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use memxbar_core::{ErrorKind, OutputUnit};
use thiserror::Error;

use config::{from_table, read_table, remove_key, set_key, set_value, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read or write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("invalid config: {0}")]
    Invariant(String),

    #[error("bad override: {0}")]
    Override(String),

    #[error("{0}")]
    Missing(String),

    #[error("output error: {0}")]
    Output(String),

    #[error(transparent)]
    Core(#[from] memxbar_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::InvalidInput => 1,
                ErrorKind::Numerical => 2,
                ErrorKind::Timeout => 3,
            },
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "memxbar", version, about = "Memristor crossbar dot-product simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config, or a previous CSV/JSON result to re-run from its embedded config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Result file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for random conductances and Monte Carlo (`analysis.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Override any config key, e.g. `--set parasitics.r_t=100`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnitArg {
    Volts,
    Amperes,
}

impl From<UnitArg> for OutputUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Volts => OutputUnit::Volts,
            UnitArg::Amperes => OutputUnit::Amperes,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ideal and simulated column currents for the configured crossbar.
    Dotprod,
    /// Metrics over one parameter axis.
    Sweep {
        /// r_t, r_p, c_p, g_scale or g_t.
        #[arg(long)]
        param: Option<String>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// bandwidth, error_vm, error_cm, energy.
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<String>>,
    },
    /// -3 dB bandwidth per column.
    Bandwidth {
        #[arg(long)]
        column: Option<usize>,
    },
    /// Energy drawn from the drive after a step.
    Energy,
    /// Statistics over perturbed instances.
    Montecarlo {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        g_rel_std: Option<f64>,
        #[arg(long)]
        neuron_rel_std: Option<f64>,
    },
    /// Fits a sigmoid to a two-column CSV of (x, y) samples.
    FitSigmoid {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        unit: Option<UnitArg>,
    },
    /// Pushes column currents through the configured neuron.
    NeuronTransfer {
        #[arg(long)]
        preset: Option<String>,
        /// Currents to evaluate instead of solving the crossbar.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        currents: Option<Vec<f64>>,
    },
    /// Lists the built-in neuron presets.
    Presets,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dotprod => "dotprod",
            Command::Sweep { .. } => "sweep",
            Command::Bandwidth { .. } => "bandwidth",
            Command::Energy => "energy",
            Command::Montecarlo { .. } => "montecarlo",
            Command::FitSigmoid { .. } => "fit-sigmoid",
            Command::NeuronTransfer { .. } => "neuron-transfer",
            Command::Presets => "presets",
        }
    }
}

fn floats(values: &[f64]) -> toml::Value {
    toml::Value::Array(values.iter().map(|&v| toml::Value::Float(v)).collect())
}

/// Folds subcommand flags into the raw config table, so they pass the same
/// strict validation as the file.
fn apply_flags(table: &mut toml::Table, command: &Command) -> Result<(), CliError> {
    match command {
        Command::Sweep { param, values, metrics } => {
            if let Some(p) = param {
                set_value(table, "analysis.sweep.param", toml::Value::String(p.clone()))?;
            }
            if let Some(v) = values {
                remove_key(table, "analysis.sweep.log_space");
                set_value(table, "analysis.sweep.values", floats(v))?;
            }
            if let Some(m) = metrics {
                let list = m.iter().map(|s| toml::Value::String(s.clone())).collect();
                set_value(table, "analysis.sweep.metrics", toml::Value::Array(list))?;
            }
        }
        Command::Bandwidth { column: Some(c) } => {
            set_value(table, "analysis.bandwidth.column", toml::Value::Integer(*c as i64))?;
        }
        Command::Montecarlo { samples, g_rel_std, neuron_rel_std } => {
            if let Some(n) = samples {
                set_value(table, "analysis.montecarlo.n_samples", toml::Value::Integer(*n as i64))?;
            }
            if let Some(s) = g_rel_std {
                set_value(table, "analysis.montecarlo.g_rel_std", toml::Value::Float(*s))?;
            }
            if let Some(s) = neuron_rel_std {
                set_value(table, "analysis.montecarlo.neuron_rel_std", toml::Value::Float(*s))?;
            }
        }
        Command::FitSigmoid { input, unit } => {
            if let Some(p) = input {
                set_value(table, "analysis.fit.input", toml::Value::String(p.display().to_string()))?;
            }
            if let Some(u) = unit {
                let s = match u {
                    UnitArg::Volts => "volts",
                    UnitArg::Amperes => "amperes",
                };
                set_value(table, "analysis.fit.unit", toml::Value::String(s.into()))?;
            }
        }
        Command::NeuronTransfer { preset, currents } => {
            if let Some(p) = preset {
                let mut neuron = toml::Table::new();
                neuron.insert("preset".into(), toml::Value::String(p.clone()));
                table.insert("neuron".into(), toml::Value::Table(neuron));
            }
            if let Some(c) = currents {
                set_value(table, "analysis.transfer.currents", floats(c))?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut table = match &cli.common.config {
        Some(path) => read_table(path)?,
        None => toml::Table::new(),
    };
    apply_flags(&mut table, &cli.command)?;
    for kv in &cli.common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Override(format!("expected KEY=VALUE, got {kv:?}")))?;
        set_key(&mut table, k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.common.seed {
        let seed = i64::try_from(seed)
            .map_err(|_| CliError::Override(format!("seed {seed} does not fit a TOML integer")))?;
        set_value(&mut table, "analysis.seed", toml::Value::Integer(seed))?;
    }
    if let Some(out) = &cli.common.out {
        set_value(&mut table, "output.path", toml::Value::String(out.display().to_string()))?;
    }
    if let Some(f) = cli.common.format {
        let s = match f {
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
        };
        set_value(&mut table, "output.format", toml::Value::String(s.into()))?;
    }

    let cfg: RunConfig = from_table(table)?;
    let resolved = cfg.resolve()?;
    let report = commands::execute(cli.command.name(), &cfg, &resolved)?;

    // the destination is not part of the experiment, so re-runs may go elsewhere
    let mut embedded = cfg.clone();
    embedded.output.path = None;
    let text = output::render(cli.command.name(), &report, &embedded, cfg.output.format)?;
    output::emit(&text, cfg.output.path.as_deref())?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
