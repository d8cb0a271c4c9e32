//! Behavioral sigmoid neurons at the column terminals.
//!
//! The transfer is `y = a / (1 + exp(b·(x − c)))` with the column current as
//! input. Voltage-mode neurons produce volts and current-mode neurons produce
//! amperes; [`OutputUnit`] records which, and nothing converts between them.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputUnit {
    Volts,
    Amperes,
}

impl OutputUnit {
    pub fn symbol(self) -> &'static str {
        match self {
            OutputUnit::Volts => "V",
            OutputUnit::Amperes => "A",
        }
    }
}

impl fmt::Display for OutputUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputUnit::Volts => "volts",
            OutputUnit::Amperes => "amperes",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmoidParams {
    /// Output span, in `unit`.
    pub a: f64,
    /// Inverse input scale (1/A).
    pub b: f64,
    /// Input offset (A).
    pub c: f64,
    /// Residual of the fit the parameters came from, in `unit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    pub unit: OutputUnit,
}

impl SigmoidParams {
    pub fn new(a: f64, b: f64, c: f64, unit: OutputUnit) -> Result<Self> {
        let p = Self {
            a,
            b,
            c,
            rmse: None,
            unit,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_rmse(mut self, rmse: f64) -> Self {
        self.rmse = Some(rmse);
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("sigmoid a", self.a)?;
        ensure_finite("sigmoid b", self.b)?;
        if self.b == 0.0 {
            return Err(Error::invalid("sigmoid b must be non-zero"));
        }
        ensure_finite("sigmoid c", self.c)?;
        if let Some(r) = self.rmse {
            ensure_finite("sigmoid rmse", r)?;
        }
        Ok(())
    }
}

/// `1 / (1 + e^z)` without overflow for large `|z|`.
fn logistic_neg(z: f64) -> f64 {
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Evaluates the sigmoid. Saturates to the asymptotes instead of
/// overflowing, and returns exactly `a/2` at `x = c`.
pub fn sigmoid(p: &SigmoidParams, x: f64) -> f64 {
    p.a * logistic_neg(p.b * (x - p.c))
}

/// Small-signal quantities of the low-impedance input stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallSignalParams {
    /// Output resistance of the input transistor (Ω).
    pub r_ds7: f64,
    /// Transconductance of the input transistor (S).
    pub g_m7: f64,
    /// Open-loop gain of the feedback amplifier.
    pub gain_a: f64,
}

impl SmallSignalParams {
    pub fn new(r_ds7: f64, g_m7: f64, gain_a: f64) -> Result<Self> {
        ensure_positive("r_ds7", r_ds7)?;
        ensure_positive("g_m7", g_m7)?;
        ensure_finite("gain_a", gain_a)?;
        if gain_a < 0.0 {
            return Err(Error::invalid(format!("gain_a must be >= 0, got {gain_a}")));
        }
        Ok(Self { r_ds7, g_m7, gain_a })
    }
}

/// `r_ds7 / (1 + g_m7·r_ds7·A)`.
pub fn input_impedance(s: &SmallSignalParams) -> f64 {
    s.r_ds7 / (1.0 + s.g_m7 * s.r_ds7 * s.gain_a)
}

/// Published operating point of a neuron circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronPreset {
    pub label: String,
    pub params: SigmoidParams,
    /// Low-frequency input impedance (Ω).
    pub z_in: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    /// Supply power (W).
    pub power: f64,
    /// Supply voltage (V).
    pub vdd: f64,
}

/// The voltage-mode neuron at 1.8 V and the current-mode neuron at 1.8, 1.5
/// and 1.0 V. Fit residuals are attached only where the fit was reported.
pub fn builtin_presets() -> Vec<NeuronPreset> {
    let vm = SigmoidParams {
        a: 1.754,
        b: -2.13e6,
        c: 4.963e-6,
        rmse: Some(0.06422),
        unit: OutputUnit::Volts,
    };
    let cm = SigmoidParams {
        a: 4.917e-6,
        b: -2e6,
        c: 2.618e-6,
        rmse: None,
        unit: OutputUnit::Amperes,
    };
    let preset = |label: &str, params, z_in, bandwidth, power, vdd| NeuronPreset {
        label: label.to_string(),
        params,
        z_in,
        bandwidth,
        power,
        vdd,
    };
    vec![
        preset("vm-1.8", vm, 243.0, 50e6, 100.8e-6, 1.8),
        preset("cm-1.8", SigmoidParams { rmse: Some(8.506e-9), ..cm }, 200.0, 6.25e6, 40.5e-6, 1.8),
        preset("cm-1.5", cm, 126.0, 5.2e6, 33.75e-6, 1.5),
        preset("cm-1.0", cm, 274.0, 10e6, 12.5e-6, 1.0),
    ]
}

pub fn find_preset(label: &str) -> Result<NeuronPreset> {
    builtin_presets()
        .into_iter()
        .find(|p| p.label == label)
        .ok_or_else(|| {
            let known: Vec<String> = builtin_presets().into_iter().map(|p| p.label).collect();
            Error::invalid(format!(
                "unknown neuron preset {label:?}, expected one of {}",
                known.join(", ")
            ))
        })
}

/// Neuron output for a given column current.
pub fn neuron_transfer(preset: &NeuronPreset, column_current: f64) -> f64 {
    sigmoid(&preset.params, column_current)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmoidFit {
    /// Best parameters found, with `rmse` set.
    pub params: SigmoidParams,
    /// Residual of the deterministic starting point.
    pub initial_rmse: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out before the step size or the
    /// residual stopped changing.
    pub converged: bool,
}

const FIT_MAX_ITER: usize = 500;

/// Least-squares sigmoid fit by Levenberg–Marquardt damping of Gauss–Newton.
///
/// Start: `a₀ = max y`, `c₀` the x of the sample whose y is nearest `a₀/2`,
/// and `b₀` from the central-difference slope there (`y' = −a·b/4` at the
/// midpoint). Only steps that lower the residual are taken, so the result is
/// never worse than the start.
pub fn fit_sigmoid(samples: &[(f64, f64)], unit: OutputUnit) -> Result<SigmoidFit> {
    if samples.len() < 4 {
        return Err(Error::NoFit(format!(
            "need at least 4 samples, got {}",
            samples.len()
        )));
    }
    for &(x, y) in samples {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NoFit(format!("non-finite sample ({x}, {y})")));
        }
    }
    let mut pts = samples.to_vec();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (x_lo, x_hi) = (pts[0].0, pts[pts.len() - 1].0);
    if x_lo == x_hi {
        return Err(Error::NoFit("all x values are equal".into()));
    }
    let y_max = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let y_min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if y_max == y_min {
        return Err(Error::NoFit("y is constant".into()));
    }
    if y_max <= 0.0 {
        return Err(Error::NoFit("no positive y values".into()));
    }

    // work in units where x and y are O(1)
    let sx = x_lo.abs().max(x_hi.abs());
    let sy = y_max.abs();
    let u: Vec<f64> = pts.iter().map(|p| p.0 / sx).collect();
    let w: Vec<f64> = pts.iter().map(|p| p.1 / sy).collect();

    let a0 = 1.0;
    let mid = (0..w.len())
        .min_by(|&i, &j| (w[i] - 0.5).abs().total_cmp(&(w[j] - 0.5).abs()))
        .unwrap();
    let c0 = u[mid];
    let (lo, hi) = (mid.saturating_sub(1), (mid + 1).min(u.len() - 1));
    let slope = if u[hi] > u[lo] {
        (w[hi] - w[lo]) / (u[hi] - u[lo])
    } else {
        0.0
    };
    let b0 = if slope.is_finite() && slope != 0.0 {
        -4.0 * slope / a0
    } else {
        // flat or vertical at the midpoint: one logistic width per span
        let sign = if w[w.len() - 1] >= w[0] { -1.0 } else { 1.0 };
        sign * 8.0 / (u[u.len() - 1] - u[0])
    };

    let sse = |p: &Vector3<f64>| -> f64 {
        u.iter()
            .zip(&w)
            .map(|(&ui, &wi)| {
                let r = wi - p[0] * logistic_neg(p[1] * (ui - p[2]));
                r * r
            })
            .sum()
    };

    let mut p = Vector3::new(a0, b0, c0);
    let mut cost = sse(&p);
    let initial_cost = cost;
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < FIT_MAX_ITER {
        iterations += 1;
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&ui, &wi) in u.iter().zip(&w) {
            let z = p[1] * (ui - p[2]);
            let s = logistic_neg(z);
            let t = logistic_neg(-z);
            let f = p[0] * s;
            let ds = -p[0] * s * t;
            let row = Vector3::new(s, ds * (ui - p[2]), -ds * p[1]);
            jtj += row * row.transpose();
            jtr += row * (wi - f);
        }

        let mut improved = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for k in 0..3 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let trial_cost = sse(&trial);
            if trial_cost.is_finite() && trial_cost < cost {
                let small_step = step.norm() <= 1e-15 * (p.norm() + 1e-15);
                let small_gain = cost - trial_cost <= 1e-15 * cost;
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if small_step || small_gain {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || converged || cost == 0.0 {
            // no downhill step exists at any damping: a stationary point
            converged = true;
            break;
        }
    }

    let n = u.len() as f64;
    let params = SigmoidParams {
        a: p[0] * sy,
        b: p[1] / sx,
        c: p[2] * sx,
        rmse: Some((cost / n).sqrt() * sy),
        unit,
    };
    params
        .validate()
        .map_err(|e| Error::NoFit(format!("fit left the valid parameter region: {e}")))?;
    Ok(SigmoidFit {
        params,
        initial_rmse: (initial_cost / n).sqrt() * sy,
        iterations,
        converged,
    })
}
