//! Run configuration: a strict TOML document, or the config embedded in a
//! previous result file.

use std::fs;
use std::path::{Path, PathBuf};

use memxbar_core::analysis::{
    BandwidthOptions, EnergyOptions, McObservable, Metric, Perturbation, SweepAxis, SweepParam,
};
use memxbar_core::neuron::find_preset;
use memxbar_core::{CrossbarConfig, DriveMode, Grid, MemristorDevice, OutputUnit, Parasitics, SigmoidParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::output::CONFIG_DELIMITER;
use crate::CliError;

/// First line of every CSV result; lets `--config` recognise result files.
pub const CSV_MARKER: &str = "# memxbar result:";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub device: DeviceBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossbar: Option<CrossbarBlock>,
    #[serde(default)]
    pub parasitics: ParasiticsBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neuron: Option<NeuronBlock>,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceBlock {
    pub g_off: f64,
    pub g_on: f64,
    pub v_th: f64,
    pub k_mob: f64,
}

impl Default for DeviceBlock {
    fn default() -> Self {
        Self {
            g_off: 1e-6,
            g_on: 1e-3,
            v_th: 1.0,
            k_mob: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossbarBlock {
    pub n_rows: usize,
    pub n_cols: usize,
    #[serde(default = "default_mode")]
    pub mode: DriveMode,
    pub conductance: Conductance,
    /// Defaults to 0.1 V per row in voltage mode, 1 µA in current mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<Drive>,
    #[serde(default)]
    pub source_resistance: f64,
}

fn default_mode() -> DriveMode {
    DriveMode::Voltage
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Conductance {
    Uniform(f64),
    /// Row-major, `n_rows` rows of `n_cols` values.
    Matrix(Vec<Vec<f64>>),
    /// Uniform draws in `[min, max]` from `analysis.seed`.
    Random { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Drive {
    Uniform(f64),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParasiticsBlock {
    pub r_p: f64,
    pub c_p: f64,
    pub r_t: f64,
}

/// Either `preset = "<label>"` or inline `a`, `b`, `c`, `unit`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<OutputUnit>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub bandwidth: BandwidthBlock,
    #[serde(default)]
    pub energy: EnergyOptions,
    #[serde(default)]
    pub montecarlo: MonteCarloBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub param: SweepParam,
    /// Explicit axis values; exclusive with `log_space`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_space: Option<LogSpace>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::ErrorVm]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogSpace {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl LogSpace {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.start > 0.0 && self.stop > 0.0 && self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::Invariant(
                "analysis.sweep.log_space needs finite start > 0 and stop > 0".into(),
            ));
        }
        if self.points < 2 {
            return Err(CliError::Invariant("analysis.sweep.log_space needs at least 2 points".into()));
        }
        let (l0, l1) = (self.start.log10(), self.stop.log10());
        let last = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|k| match k {
                0 => self.start,
                k if k == self.points - 1 => self.stop,
                k => 10f64.powf(l0 + (l1 - l0) * k as f64 / last),
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthBlock {
    /// Column to analyse; every column when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(default)]
    pub options: BandwidthOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    DotProductError,
    FittedSigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloBlock {
    pub n_samples: usize,
    pub g_rel_std: f64,
    pub neuron_rel_std: f64,
    pub observable: ObservableKind,
    /// Column feeding the neuron for `fitted_sigmoid`.
    pub column: usize,
}

impl Default for MonteCarloBlock {
    fn default() -> Self {
        Self {
            n_samples: 100,
            g_rel_std: 0.0,
            neuron_rel_std: 0.0,
            observable: ObservableKind::DotProductError,
            column: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    /// Two-column CSV of `(x, y)` samples; a non-numeric first row is a header.
    pub input: PathBuf,
    #[serde(default = "default_fit_unit")]
    pub unit: OutputUnit,
}

fn default_fit_unit() -> OutputUnit {
    OutputUnit::Amperes
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferBlock {
    /// Column currents to push through the neuron; when absent the crossbar
    /// is solved and its column currents are used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub currents: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Result file; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// Config after every invariant has been checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub crossbar: Option<(CrossbarConfig, Vec<f64>)>,
    pub neuron: Option<SigmoidParams>,
    pub preset: Option<String>,
    pub sweep: Option<(SweepAxis, Vec<Metric>)>,
    pub montecarlo: (Perturbation, Option<McObservable>),
}

impl RunConfig {
    pub fn device(&self) -> Result<MemristorDevice, CliError> {
        let d = self.device;
        Ok(MemristorDevice::new(d.g_off, d.g_on, d.v_th, d.k_mob)?)
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let device = self.device()?;
        let p = self.parasitics;
        let parasitics = Parasitics {
            r_p: p.r_p,
            c_p: p.c_p,
            r_t: p.r_t,
        };
        parasitics.validate()?;

        let crossbar = match &self.crossbar {
            Some(block) => Some(self.build_crossbar(block, device, parasitics)?),
            None => None,
        };

        let (neuron, preset) = match &self.neuron {
            Some(n) => {
                let (params, label) = resolve_neuron(n)?;
                (Some(params), label)
            }
            None => (None, None),
        };

        let sweep = match &self.analysis.sweep {
            Some(s) => {
                let values = match (&s.values, &s.log_space) {
                    (Some(v), None) => v.clone(),
                    (None, Some(l)) => l.values()?,
                    _ => {
                        return Err(CliError::Invariant(
                            "analysis.sweep needs exactly one of `values` or `log_space`".into(),
                        ))
                    }
                };
                if s.metrics.is_empty() {
                    return Err(CliError::Invariant("analysis.sweep.metrics is empty".into()));
                }
                if let Some((cfg, _)) = &crossbar {
                    for &v in &values {
                        s.param.apply(cfg, v)?;
                    }
                }
                Some((SweepAxis { param: s.param, values }, s.metrics.clone()))
            }
            None => None,
        };

        let mc = &self.analysis.montecarlo;
        let perturbation = Perturbation {
            g_rel_std: mc.g_rel_std,
            neuron_rel_std: mc.neuron_rel_std,
        };
        for (key, v) in [("g_rel_std", mc.g_rel_std), ("neuron_rel_std", mc.neuron_rel_std)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Invariant(format!(
                    "analysis.montecarlo.{key} must be finite and >= 0, got {v}"
                )));
            }
        }
        if mc.n_samples == 0 {
            return Err(CliError::Invariant("analysis.montecarlo.n_samples must be >= 1".into()));
        }
        let observable = match mc.observable {
            ObservableKind::DotProductError => Some(McObservable::DotProductError),
            ObservableKind::FittedSigmoid => neuron.map(|neuron| McObservable::FittedSigmoid {
                neuron,
                column: mc.column,
            }),
        };

        if let Some(col) = self.analysis.bandwidth.column {
            if let Some((cfg, _)) = &crossbar {
                if col >= cfg.n_cols() {
                    return Err(CliError::Invariant(format!(
                        "analysis.bandwidth.column = {col} but the crossbar has {} columns",
                        cfg.n_cols()
                    )));
                }
            }
        }

        Ok(Resolved {
            crossbar,
            neuron,
            preset,
            sweep,
            montecarlo: (perturbation, observable),
        })
    }

    fn build_crossbar(
        &self,
        block: &CrossbarBlock,
        device: MemristorDevice,
        parasitics: Parasitics,
    ) -> Result<(CrossbarConfig, Vec<f64>), CliError> {
        let (n, m) = (block.n_rows, block.n_cols);
        if n == 0 || m == 0 {
            return Err(CliError::Invariant(format!(
                "crossbar must be at least 1x1, got {n}x{m}"
            )));
        }
        let grid = match &block.conductance {
            Conductance::Uniform(g) => Grid::filled(n, m, *g)?,
            Conductance::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != m) {
                    return Err(CliError::Invariant(format!(
                        "crossbar.conductance.matrix must be {n} rows of {m} values"
                    )));
                }
                Grid::from_rows(rows.clone())?
            }
            Conductance::Random { min, max } => {
                if !(min.is_finite() && max.is_finite() && min <= max) {
                    return Err(CliError::Invariant(format!(
                        "crossbar.conductance.random needs finite min <= max, got [{min}, {max}]"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.analysis.seed);
                let data = (0..n * m)
                    .map(|_| if min == max { *min } else { rng.random_range(*min..=*max) })
                    .collect();
                Grid::new(n, m, data)?
            }
        };
        let mut cfg = CrossbarConfig::new(device, grid, parasitics, block.mode)?;
        cfg.source_resistance = block.source_resistance;
        cfg.validate()?;

        let drive = match &block.drive {
            Some(Drive::Uniform(v)) => vec![*v; n],
            Some(Drive::Values(v)) => {
                if v.len() != n {
                    return Err(CliError::Invariant(format!(
                        "crossbar.drive.values has {} entries for {n} rows",
                        v.len()
                    )));
                }
                v.clone()
            }
            None => match block.mode {
                DriveMode::Voltage => vec![0.1; n],
                DriveMode::Current => vec![1e-6; n],
            },
        };
        if let Some(v) = drive.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Invariant(format!("crossbar.drive contains {v}")));
        }
        Ok((cfg, drive))
    }
}

fn resolve_neuron(n: &NeuronBlock) -> Result<(SigmoidParams, Option<String>), CliError> {
    let inline = [n.a.is_some(), n.b.is_some(), n.c.is_some(), n.unit.is_some()];
    match &n.preset {
        Some(label) => {
            if inline.iter().any(|&x| x) {
                return Err(CliError::Invariant(
                    "neuron takes either `preset` or inline a, b, c, unit, not both".into(),
                ));
            }
            Ok((find_preset(label)?.params, Some(label.clone())))
        }
        None => match (n.a, n.b, n.c, n.unit) {
            (Some(a), Some(b), Some(c), Some(unit)) => Ok((SigmoidParams::new(a, b, c, unit)?, None)),
            _ => Err(CliError::Invariant(
                "neuron needs `preset` or all of a, b, c, unit".into(),
            )),
        },
    }
}

/// Reads a TOML config, or the config embedded in a CSV or JSON result file,
/// as a raw table ready for overrides.
pub fn read_table(path: &Path) -> Result<toml::Table, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let origin = path.display().to_string();
    if text.starts_with(CSV_MARKER) {
        let embedded: String = text
            .lines()
            .skip_while(|l| *l != CONFIG_DELIMITER)
            .skip(1)
            .map_while(|l| l.strip_prefix('#'))
            .map(|l| l.strip_prefix(' ').unwrap_or(l))
            .collect::<Vec<_>>()
            .join("\n");
        return parse_toml(&embedded, &format!("{origin} (embedded config)"));
    }
    if text.trim_start().starts_with('{') {
        let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Parse {
            origin: origin.clone(),
            message: e.to_string(),
        })?;
        let cfg = doc.get("config").cloned().ok_or_else(|| CliError::Parse {
            origin: origin.clone(),
            message: "JSON result has no `config` object".into(),
        })?;
        let parsed: RunConfig = serde_path_to_error::deserialize(cfg).map_err(|e| CliError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        return to_table(&parsed);
    }
    parse_toml(&text, &origin)
}

fn parse_toml(text: &str, origin: &str) -> Result<toml::Table, CliError> {
    text.parse::<toml::Table>().map_err(|e| CliError::Parse {
        origin: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })
}

pub fn to_table(cfg: &RunConfig) -> Result<toml::Table, CliError> {
    toml::Table::try_from(cfg).map_err(|e| CliError::Output(format!("config serialization failed: {e}")))
}

/// Sets `dotted.key = value`, creating intermediate tables. The value is read
/// as a TOML literal, falling back to a plain string.
pub fn set_key(table: &mut toml::Table, key: &str, value: &str) -> Result<(), CliError> {
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    set_value(table, key, parsed)
}

pub fn set_value(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Override(format!("malformed key {key:?}")));
    }
    let mut cur = table;
    for (depth, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => {
                return Err(CliError::Override(format!(
                    "{} is not a table",
                    parts[..=depth].join(".")
                )))
            }
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub fn remove_key(table: &mut toml::Table, key: &str) {
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        match cur.get_mut(*part) {
            Some(toml::Value::Table(t)) => cur = t,
            _ => return,
        }
    }
    cur.remove(parts[parts.len() - 1]);
}

/// Strict deserialization; unknown keys are reported with their full path.
pub fn from_table(table: toml::Table) -> Result<RunConfig, CliError> {
    let value = toml::Value::Table(table);
    serde_path_to_error::deserialize(value).map_err(|e| CliError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}
