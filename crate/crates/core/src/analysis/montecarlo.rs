use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ideal_columns, simulate_columns};
use crate::error::{ensure_non_negative, Error, Result};
use crate::ideal::dot_product_error;
use crate::network::CrossbarConfig;
use crate::neuron::{fit_sigmoid, sigmoid, SigmoidParams};

/// Relative standard deviations of the multiplicative Gaussian draws.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Perturbation {
    /// Applied to every memristor conductance, clamped to the device range.
    pub g_rel_std: f64,
    /// Applied independently to the neuron's a, b and c.
    pub neuron_rel_std: f64,
}

/// What each Monte Carlo instance reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum McObservable {
    /// Error of the perturbed crossbar against the ideal output of the
    /// nominal conductances.
    DotProductError,
    /// Sigmoid refitted to the neuron's response over a drive ramp, with the
    /// nominal ideal column current as input.
    FittedSigmoid { neuron: SigmoidParams, column: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McParameter {
    pub name: String,
    /// Value on the unperturbed instance.
    pub nominal: f64,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); zero for one sample.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub n_samples: usize,
    pub seed: u64,
    pub perturbation: Perturbation,
    pub parameters: Vec<McParameter>,
    /// Fraction of conductance draws that hit a device bound.
    pub clamped_fraction: f64,
    pub warning: Option<String>,
}

impl McStats {
    pub fn parameter(&self, name: &str) -> Option<&McParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

/// Points on the drive ramp for the sigmoid observable.
const RAMP_POINTS: usize = 101;
/// Ramp half-width in logistic input units, |b|·(x − c).
const RAMP_HALF_WIDTH: f64 = 8.0;

struct Sample {
    values: Vec<f64>,
    clamped: usize,
    drawn: usize,
}

fn multiplier(rng: &mut ChaCha8Rng, rel_std: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    1.0 + rel_std * z
}

fn evaluate(
    cfg: &CrossbarConfig,
    drive: &[f64],
    observable: &McObservable,
    perturbation: &Perturbation,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Sample> {
    let mut inst = cfg.clone();
    let (lo, hi) = cfg.device.range();
    let mut clamped = 0;
    let drawn = cfg.conductances.as_slice().len();
    let mut neuron_factors = [1.0; 3];
    if let Some(rng) = rng {
        let mut g = cfg.conductances.clone();
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let raw = g.get(i, j) * multiplier(rng, perturbation.g_rel_std);
                let v = raw.clamp(lo, hi);
                if v != raw {
                    clamped += 1;
                }
                g.set(i, j, v);
            }
        }
        inst.conductances = g;
        for f in &mut neuron_factors {
            *f = multiplier(rng, perturbation.neuron_rel_std);
        }
    }

    let values = match *observable {
        McObservable::DotProductError => {
            let actual = simulate_columns(&inst, drive)?;
            vec![dot_product_error(&actual, &ideal_columns(cfg, drive)?)?]
        }
        McObservable::FittedSigmoid { neuron, column } => {
            let p = SigmoidParams {
                a: neuron.a * neuron_factors[0],
                b: neuron.b * neuron_factors[1],
                c: neuron.c * neuron_factors[2],
                rmse: None,
                unit: neuron.unit,
            };
            p.validate().map_err(|e| {
                Error::invalid(format!("perturbed neuron parameters are invalid ({e}); lower neuron_rel_std"))
            })?;
            // both currents are linear in the drive scale, so one solve each
            let rho0 = ideal_columns(cfg, drive)?.column_currents[column];
            let rho = simulate_columns(&inst, drive)?.column_currents[column];
            let centre = neuron.c / rho0;
            let half = RAMP_HALF_WIDTH / (neuron.b * rho0).abs();
            let samples: Vec<(f64, f64)> = (0..RAMP_POINTS)
                .map(|k| {
                    let s = centre + half * (2.0 * k as f64 / (RAMP_POINTS - 1) as f64 - 1.0);
                    (s * rho0, sigmoid(&p, s * rho))
                })
                .collect();
            let fit = fit_sigmoid(&samples, neuron.unit)?.params;
            vec![fit.a, fit.b, fit.c]
        }
    };
    Ok(Sample {
        values,
        clamped,
        drawn,
    })
}

/// Draws `n` perturbed instances and summarizes the observable.
///
/// Sample `k` uses its own ChaCha8 stream (`seed`, stream `k`), so results
/// are independent of evaluation order and thread count.
pub fn monte_carlo(
    cfg: &CrossbarConfig,
    drive: &[f64],
    perturbation: &Perturbation,
    n: usize,
    seed: u64,
    observable: &McObservable,
) -> Result<McStats> {
    if n == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one sample"));
    }
    ensure_non_negative("g_rel_std", perturbation.g_rel_std)?;
    ensure_non_negative("neuron_rel_std", perturbation.neuron_rel_std)?;
    cfg.validate()?;
    let names: &[&str] = match observable {
        McObservable::DotProductError => &["error"],
        McObservable::FittedSigmoid { neuron, column } => {
            neuron.validate()?;
            if *column >= cfg.n_cols() {
                return Err(Error::invalid(format!(
                    "column {column} out of range for {} columns",
                    cfg.n_cols()
                )));
            }
            let rho0 = ideal_columns(cfg, drive)?.column_currents[*column];
            if rho0.is_nan() || rho0 == 0.0 {
                return Err(Error::invalid(format!(
                    "column {column} carries no ideal current under this drive"
                )));
            }
            &["a", "b", "c"]
        }
    };

    let nominal = evaluate(cfg, drive, observable, perturbation, None)?.values;
    let samples: Vec<Sample> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            evaluate(cfg, drive, observable, perturbation, Some(&mut rng))
        })
        .collect::<Result<_>>()?;

    let parameters = names
        .iter()
        .enumerate()
        .map(|(p, name)| {
            let xs: Vec<f64> = samples.iter().map(|s| s.values[p]).collect();
            // offset by the first sample so identical draws give their exact value
            let x0 = xs[0];
            let mean = x0 + xs.iter().map(|x| x - x0).sum::<f64>() / n as f64;
            let std = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            McParameter {
                name: name.to_string(),
                nominal: nominal[p],
                mean,
                std,
            }
        })
        .collect();

    let clamped: usize = samples.iter().map(|s| s.clamped).sum();
    let drawn: usize = samples.iter().map(|s| s.drawn).sum();
    let clamped_fraction = clamped as f64 / drawn as f64;
    let warning = (clamped_fraction > 0.5).then(|| {
        format!(
            "{:.1}% of conductance draws were clamped to the device range; the distribution is badly truncated",
            100.0 * clamped_fraction
        )
    });
    Ok(McStats {
        n_samples: n,
        seed,
        perturbation: *perturbation,
        parameters,
        clamped_fraction,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::MemristorDevice;
    use crate::grid::Grid;
    use crate::network::{DriveMode, Parasitics};
    use crate::neuron::find_preset;

    fn cfg() -> CrossbarConfig {
        let g = Grid::from_rows(vec![vec![1e-5, 3e-5], vec![2e-5, 5e-6]]).unwrap();
        CrossbarConfig::new(
            MemristorDevice::new(1e-6, 1e-3, 1.0, 1.0).unwrap(),
            g,
            Parasitics { r_p: 2.0, c_p: 0.0, r_t: 100.0 },
            DriveMode::Voltage,
        )
        .unwrap()
    }

    #[test]
    fn zero_std_gives_nominal() {
        let p = Perturbation::default();
        let s = monte_carlo(&cfg(), &[0.1, 0.2], &p, 5, 7, &McObservable::DotProductError).unwrap();
        let e = &s.parameters[0];
        assert_eq!(e.std, 0.0);
        assert_eq!(e.mean, e.nominal);
        assert_eq!(s.clamped_fraction, 0.0);
    }

    #[test]
    fn same_seed_same_stats() {
        let p = Perturbation { g_rel_std: 0.05, neuron_rel_std: 0.0 };
        let a = monte_carlo(&cfg(), &[0.1, 0.2], &p, 16, 3, &McObservable::DotProductError).unwrap();
        let b = monte_carlo(&cfg(), &[0.1, 0.2], &p, 16, 3, &McObservable::DotProductError).unwrap();
        let c = monte_carlo(&cfg(), &[0.1, 0.2], &p, 16, 4, &McObservable::DotProductError).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.parameters[0].std > 0.0);
    }

    #[test]
    fn heavy_clamping_warns() {
        let mut c = cfg();
        c.conductances = Grid::filled(2, 2, 1e-3).unwrap();
        let p = Perturbation { g_rel_std: 0.5, neuron_rel_std: 0.0 };
        let s = monte_carlo(&c, &[0.1, 0.2], &p, 50, 1, &McObservable::DotProductError).unwrap();
        assert!(s.clamped_fraction > 0.4);
        assert!(s.warning.is_some() == (s.clamped_fraction > 0.5));
    }

    #[test]
    fn fitted_sigmoid_nominal_recovers_neuron() {
        let mut c = cfg();
        c.parasitics = Parasitics::IDEAL;
        let neuron = find_preset("cm-1.8").unwrap().params;
        let obs = McObservable::FittedSigmoid { neuron, column: 0 };
        let s = monte_carlo(&c, &[0.1, 0.2], &Perturbation::default(), 1, 0, &obs).unwrap();
        for (p, truth) in s.parameters.iter().zip([neuron.a, neuron.b, neuron.c]) {
            assert!((p.nominal - truth).abs() <= 1e-6 * truth.abs(), "{p:?}");
            assert_eq!(p.std, 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = Perturbation::default();
        assert!(monte_carlo(&cfg(), &[0.1, 0.2], &p, 0, 0, &McObservable::DotProductError).is_err());
        let neg = Perturbation { g_rel_std: -0.1, neuron_rel_std: 0.0 };
        assert!(monte_carlo(&cfg(), &[0.1, 0.2], &neg, 1, 0, &McObservable::DotProductError).is_err());
    }
}
