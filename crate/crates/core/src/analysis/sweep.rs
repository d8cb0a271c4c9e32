use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bandwidth::{compute_bandwidth, BandwidthOptions};
use super::energy::{compute_energy, EnergyOptions};
use super::circuit_error;
use crate::error::{ensure_finite, Error, Result};
use crate::network::{CrossbarConfig, DriveMode};

/// Configuration knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Terminal resistance (Ω).
    RT,
    /// Wire segment resistance (Ω).
    RP,
    /// Junction capacitance (F).
    CP,
    /// Common multiplier on every conductance.
    GScale,
    /// Terminal conductance, `1/r_t` (S).
    GT,
}

impl SweepParam {
    pub const ALL: [SweepParam; 5] = [
        SweepParam::RT,
        SweepParam::RP,
        SweepParam::CP,
        SweepParam::GScale,
        SweepParam::GT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::RT => "r_t",
            SweepParam::RP => "r_p",
            SweepParam::CP => "c_p",
            SweepParam::GScale => "g_scale",
            SweepParam::GT => "g_t",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            SweepParam::RT | SweepParam::RP => "ohm",
            SweepParam::CP => "f",
            SweepParam::GScale => "x",
            SweepParam::GT => "s",
        }
    }

    /// Column header, name plus unit suffix.
    pub fn header(self) -> String {
        format!("{}_{}", self.name(), self.unit())
    }

    /// A copy of `cfg` with this parameter set to `value`.
    pub fn apply(self, cfg: &CrossbarConfig, value: f64) -> Result<CrossbarConfig> {
        ensure_finite(self.name(), value)?;
        let strictly_positive = matches!(self, SweepParam::GScale | SweepParam::GT);
        if value < 0.0 || (strictly_positive && value == 0.0) {
            return Err(Error::invalid(format!(
                "sweep value for {} must be {}, got {value:e}",
                self.name(),
                if strictly_positive { "> 0" } else { ">= 0" }
            )));
        }
        let mut out = cfg.clone();
        match self {
            SweepParam::RT => out.parasitics.r_t = value,
            SweepParam::RP => out.parasitics.r_p = value,
            SweepParam::CP => out.parasitics.c_p = value,
            SweepParam::GScale => out.conductances = cfg.conductances.map(|g| g * value),
            SweepParam::GT => out.parasitics.r_t = 1.0 / value,
        }
        out.validate()?;
        Ok(out)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown sweep parameter {s:?}, expected one of r_t, r_p, c_p, g_scale, g_t"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Smallest −3 dB bandwidth over all columns (Hz).
    Bandwidth,
    /// Dot-product error with the rows voltage-driven.
    ErrorVm,
    /// Dot-product error with the rows current-driven.
    ErrorCm,
    /// Energy per computation (J).
    Energy,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Bandwidth, Metric::ErrorVm, Metric::ErrorCm, Metric::Energy];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Bandwidth => "bandwidth",
            Metric::ErrorVm => "error_vm",
            Metric::ErrorCm => "error_cm",
            Metric::Energy => "energy",
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            Metric::Bandwidth => "bandwidth_hz",
            Metric::ErrorVm => "error_vm",
            Metric::ErrorCm => "error_cm",
            Metric::Energy => "energy_j",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::invalid(format!(
                "unknown metric {s:?}, expected one of bandwidth, error_vm, error_cm, energy"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    pub bandwidth: BandwidthOptions,
    pub energy: EnergyOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricColumn {
    pub metric: Metric,
    pub values: Vec<f64>,
}

/// Everything [`run_sweep`] consumed; re-running with it reproduces the
/// result bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub config: CrossbarConfig,
    pub drive: Vec<f64>,
    pub axis: SweepAxis,
    pub metrics: Vec<Metric>,
    pub options: SweepOptions,
    /// Seed of whatever generated the configuration, if any.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis_unit: String,
    pub axis_values: Vec<f64>,
    pub metrics: Vec<MetricColumn>,
    /// Non-fatal findings, such as multi-pole responses.
    pub warnings: Vec<String>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn column(&self, metric: Metric) -> Option<&[f64]> {
        self.metrics
            .iter()
            .find(|c| c.metric == metric)
            .map(|c| c.values.as_slice())
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.metadata.seed = seed;
        self
    }
}

fn with_mode(cfg: &CrossbarConfig, mode: DriveMode) -> CrossbarConfig {
    CrossbarConfig {
        mode,
        ..cfg.clone()
    }
}

fn point(
    cfg: &CrossbarConfig,
    drive: &[f64],
    metrics: &[Metric],
    options: &SweepOptions,
) -> Result<(Vec<f64>, Vec<String>)> {
    let mut values = Vec::with_capacity(metrics.len());
    let mut warnings = Vec::new();
    for &m in metrics {
        let v = match m {
            Metric::Bandwidth => {
                let mut lowest = f64::INFINITY;
                for j in 0..cfg.n_cols() {
                    let bw = compute_bandwidth(cfg, drive, j, &options.bandwidth)?;
                    if bw.multi_pole() {
                        warnings.push(format!("column {j}: multi-pole response, first crossing used"));
                    }
                    lowest = lowest.min(bw.hz());
                }
                lowest
            }
            // error is homogeneous in the drive, so one vector serves both modes
            Metric::ErrorVm => circuit_error(&with_mode(cfg, DriveMode::Voltage), drive)?,
            Metric::ErrorCm => circuit_error(&with_mode(cfg, DriveMode::Current), drive)?,
            Metric::Energy => compute_energy(cfg, drive, &options.energy)?.energy,
        };
        values.push(v);
    }
    Ok((values, warnings))
}

/// Evaluates `metrics` at every axis value. Points run in parallel; the
/// result keeps axis order.
pub fn run_sweep(
    cfg: &CrossbarConfig,
    drive: &[f64],
    axis: &SweepAxis,
    metrics: &[Metric],
    options: &SweepOptions,
) -> Result<SweepResult> {
    if axis.values.is_empty() {
        return Err(Error::invalid(format!("sweep over {} has no values", axis.param)));
    }
    if metrics.is_empty() {
        return Err(Error::invalid("sweep requests no metrics"));
    }
    cfg.validate()?;

    let points: Vec<(Vec<f64>, Vec<String>)> = axis
        .values
        .par_iter()
        .map(|&v| point(&axis.param.apply(cfg, v)?, drive, metrics, options))
        .collect::<Result<_>>()?;

    let mut columns: Vec<MetricColumn> = metrics
        .iter()
        .map(|&metric| MetricColumn {
            metric,
            values: Vec::with_capacity(points.len()),
        })
        .collect();
    let mut warnings = Vec::new();
    for ((values, notes), &x) in points.into_iter().zip(&axis.values) {
        for (col, v) in columns.iter_mut().zip(values) {
            col.values.push(v);
        }
        warnings.extend(notes.into_iter().map(|n| format!("{} = {x:e}: {n}", axis.param)));
    }

    Ok(SweepResult {
        axis_name: axis.param.name().to_string(),
        axis_unit: axis.param.unit().to_string(),
        axis_values: axis.values.clone(),
        metrics: columns,
        warnings,
        metadata: SweepMetadata {
            config: cfg.clone(),
            drive: drive.to_vec(),
            axis: axis.clone(),
            metrics: metrics.to_vec(),
            options: *options,
            seed: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::compute_energy;
    use crate::device::MemristorDevice;
    use crate::grid::Grid;
    use crate::network::Parasitics;

    fn cfg() -> CrossbarConfig {
        let g = Grid::from_rows(vec![vec![1e-5, 3e-5], vec![2e-5, 5e-6]]).unwrap();
        CrossbarConfig::new(
            MemristorDevice::new(1e-7, 1e-3, 1.0, 1.0).unwrap(),
            g,
            Parasitics { r_p: 2.0, c_p: 1e-15, r_t: 100.0 },
            DriveMode::Voltage,
        )
        .unwrap()
    }

    #[test]
    fn names_round_trip() {
        for p in SweepParam::ALL {
            assert_eq!(p.name().parse::<SweepParam>().unwrap(), p);
        }
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("r_x".parse::<SweepParam>().is_err());
        assert_eq!(SweepParam::RT.header(), "r_t_ohm");
    }

    #[test]
    fn empty_axis_rejected() {
        let axis = SweepAxis { param: SweepParam::RT, values: vec![] };
        assert!(run_sweep(&cfg(), &[0.1, 0.2], &axis, &[Metric::ErrorVm], &Default::default()).is_err());
    }

    #[test]
    fn single_point_equals_direct_call() {
        let axis = SweepAxis { param: SweepParam::RT, values: vec![250.0] };
        let opts = SweepOptions::default();
        let res = run_sweep(&cfg(), &[0.1, 0.2], &axis, &Metric::ALL, &opts).unwrap();
        let direct = SweepParam::RT.apply(&cfg(), 250.0).unwrap();
        let err = circuit_error(&direct, &[0.1, 0.2]).unwrap();
        let energy = compute_energy(&direct, &[0.1, 0.2], &opts.energy).unwrap().energy;
        assert_eq!(res.column(Metric::ErrorVm).unwrap(), &[err]);
        assert_eq!(res.column(Metric::Energy).unwrap(), &[energy]);
        let bw = (0..2)
            .map(|j| compute_bandwidth(&direct, &[0.1, 0.2], j, &opts.bandwidth).unwrap().hz())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(res.column(Metric::Bandwidth).unwrap(), &[bw]);
    }

    #[test]
    fn g_t_is_inverse_r_t() {
        let a = SweepParam::GT.apply(&cfg(), 0.01).unwrap();
        assert_eq!(a.parasitics.r_t, 100.0);
        assert!(SweepParam::GT.apply(&cfg(), 0.0).is_err());
        assert!(SweepParam::GScale.apply(&cfg(), 1e5).is_err());
    }

    #[test]
    fn zero_parasitic_corner_has_no_error() {
        let mut c = cfg();
        c.parasitics = Parasitics::IDEAL;
        let axis = SweepAxis { param: SweepParam::RT, values: vec![0.0, 10.0] };
        let res = run_sweep(&c, &[0.1, 0.2], &axis, &[Metric::ErrorVm, Metric::ErrorCm], &Default::default()).unwrap();
        assert!(res.column(Metric::ErrorVm).unwrap()[0] < 1e-9);
        assert!(res.column(Metric::ErrorCm).unwrap()[0] < 1e-9);
        assert!(res.column(Metric::ErrorVm).unwrap()[1] > 1e-6);
    }
}
