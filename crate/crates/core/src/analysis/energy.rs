use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::network::{build_system, CrossbarConfig};
use crate::solver::{default_time_step, dominant_time_constant, solve_dc, TransientStepper};

/// Integration window for [`compute_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergyWindow {
    /// Run until every column current is within `rel` of its DC value, then
    /// for as long again. `max_time` bounds the search; `None` allows 1000
    /// dominant time constants.
    Settle { rel: f64, max_time: Option<f64> },
    /// Integrate over a fixed duration from the step.
    Fixed { duration: f64 },
}

impl Default for EnergyWindow {
    fn default() -> Self {
        EnergyWindow::Settle {
            rel: 0.01,
            max_time: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyOptions {
    pub window: EnergyWindow,
    /// Time step; `None` uses the dominant time constant over 50.
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Energy delivered by all sources over the window (J).
    pub energy: f64,
    /// Length of the integration window (s).
    pub duration: f64,
    /// When the settle criterion was first met, for settle windows (s).
    pub settle_time: Option<f64>,
    /// Step used; zero when the network has no dynamics.
    pub dt: f64,
    pub steps: usize,
}

const DEFAULT_MAX_TIME_CONSTANTS: f64 = 1000.0;

/// Energy drawn from the drive after a step applied at `t = 0` to a
/// discharged crossbar.
pub fn compute_energy(cfg: &CrossbarConfig, drive: &[f64], options: &EnergyOptions) -> Result<EnergyReport> {
    let sys = build_system(cfg, drive)?;
    if let Some(dt) = options.dt {
        ensure_positive("energy time step", dt)?;
    }

    match options.window {
        EnergyWindow::Fixed { duration } => {
            ensure_positive("energy window duration", duration)?;
            let dt = match options.dt {
                Some(dt) => dt.min(duration),
                // no dynamics: one step spans the window
                None => default_time_step(&sys)?.map_or(duration, |dt| dt.min(duration)),
            };
            let steps = (duration / dt).ceil().max(1.0) as usize;
            let dt = duration / steps as f64;
            let mut stepper = TransientStepper::new(&sys, dt)?;
            for _ in 0..steps {
                stepper.step()?;
            }
            Ok(EnergyReport {
                energy: stepper.energy(),
                duration,
                settle_time: None,
                dt,
                steps,
            })
        }
        EnergyWindow::Settle { rel, max_time } => {
            if !(rel > 0.0 && rel < 1.0) {
                return Err(Error::invalid(format!("settle tolerance must lie in (0, 1), got {rel}")));
            }
            let Some(tau) = dominant_time_constant(&sys)? else {
                // settles at the step itself
                return Ok(EnergyReport {
                    energy: sys.pinned_step_energy(),
                    duration: 0.0,
                    settle_time: Some(0.0),
                    dt: 0.0,
                    steps: 0,
                });
            };
            let max_time = match max_time {
                Some(t) => {
                    ensure_positive("settle max_time", t)?;
                    t
                }
                None => DEFAULT_MAX_TIME_CONSTANTS * tau,
            };
            let dt = options.dt.unwrap_or(tau / crate::solver::STEPS_PER_TIME_CONSTANT);

            let dc = solve_dc(&sys)?.column_currents;
            let largest = dc.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            // columns with no DC current are judged against the largest one
            let reference: Vec<f64> = dc
                .iter()
                .map(|x| if *x != 0.0 { x.abs() } else { largest })
                .collect();
            let deviation = |cols: &[f64]| -> f64 {
                cols.iter()
                    .zip(&dc)
                    .zip(&reference)
                    .map(|((c, d), r)| {
                        let err = (c - d).abs();
                        if err == 0.0 { 0.0 } else { err / r }
                    })
                    .fold(0.0, f64::max)
            };

            let max_steps = (max_time / dt).ceil() as usize;
            let mut stepper = TransientStepper::new(&sys, dt)?;
            let mut settled_at = None;
            let mut worst = f64::INFINITY;
            while stepper.steps_taken() < max_steps {
                stepper.step()?;
                worst = deviation(&stepper.column_currents());
                if worst <= rel {
                    settled_at = Some(stepper.steps_taken());
                    break;
                }
            }
            let Some(k) = settled_at else {
                return Err(Error::SettleTimeout {
                    max_time,
                    residual: worst,
                });
            };
            while stepper.steps_taken() < 2 * k {
                stepper.step()?;
            }
            Ok(EnergyReport {
                energy: stepper.energy(),
                duration: stepper.time(),
                settle_time: Some(k as f64 * dt),
                dt,
                steps: stepper.steps_taken(),
            })
        }
    }
}
