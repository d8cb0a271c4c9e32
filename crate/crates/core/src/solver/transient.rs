//! Step response by trapezoidal integration.
//!
//! The first steps use backward Euler: it damps the stiff modes (junctions
//! behind sub-ohm wire segments have femtosecond time constants) that the
//! trapezoidal rule would otherwise carry along as an undamped ±1 oscillation,
//! and it makes any capacitor-free nets consistent with the applied step. The
//! trapezoidal rule takes over afterwards.
//!
//! Energy is accumulated with the quadrature that matches each step (right
//! endpoint for backward Euler, trapezoid for the trapezoidal rule), so the
//! charge drawn from every source is exactly the charge the discrete equations
//! moved, including the fast charging of the stiff nodes.

use super::ldl::{factor_labelled, LdlFactor};
use super::{label_fn, SymMatrix};
use crate::error::{Error, Result};
use crate::network::NodalSystem;

/// Number of startup backward-Euler steps.
const STARTUP_BE_STEPS: usize = 2;

/// Default resolution of the dominant time constant.
pub const STEPS_PER_TIME_CONSTANT: f64 = 50.0;

/// Largest eigenvalue of `G⁻¹C`, i.e. the slowest time constant of the
/// network, by power iteration. `None` when no unknown net has capacitance.
pub fn dominant_time_constant(sys: &NodalSystem) -> Result<Option<f64>> {
    let c = sys.capacitance();
    if !sys.is_dynamic() {
        return Ok(None);
    }
    let factor = factor_labelled(sys.conductance_matrix(), label_fn(sys))?;
    let c_dot = |x: &[f64], y: &[f64]| -> f64 {
        x.iter().zip(y).zip(c).map(|((a, b), w)| a * b * w).sum()
    };
    let mut x = vec![1.0; c.len()];
    let mut tau = 0.0;
    for _ in 0..500 {
        let cx: Vec<f64> = x.iter().zip(c).map(|(a, w)| a * w).collect();
        let y = factor.solve(&cx);
        let next = c_dot(&x, &y) / c_dot(&x, &x);
        let norm = c_dot(&y, &y).sqrt();
        x = y.iter().map(|v| v / norm).collect();
        let converged = (next - tau).abs() <= 1e-9 * next;
        tau = next;
        if converged {
            break;
        }
    }
    Ok(Some(tau))
}

/// Dominant time constant divided by [`STEPS_PER_TIME_CONSTANT`].
pub fn default_time_step(sys: &NodalSystem) -> Result<Option<f64>> {
    Ok(dominant_time_constant(sys)?.map(|tau| tau / STEPS_PER_TIME_CONSTANT))
}

/// Marches the system forward from rest under a step of every excitation
/// applied at `t = 0`.
pub struct TransientStepper<'a> {
    sys: &'a NodalSystem,
    dt: f64,
    be: LdlFactor<f64>,
    tr: LdlFactor<f64>,
    steps_taken: usize,
    v: Vec<f64>,
    power: f64,
    energy: f64,
    bound: f64,
}

impl<'a> TransientStepper<'a> {
    pub fn new(sys: &'a NodalSystem, dt: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::invalid(format!("time step must be > 0, got {dt}")));
        }
        let g = sys.conductance_matrix();
        let shifted = |factor: f64| -> SymMatrix {
            let mut a = g.clone();
            let d: Vec<f64> = sys.capacitance().iter().map(|&c| factor * c / dt).collect();
            a.add_to_diagonal(&d);
            a
        };
        let be = factor_labelled(&shifted(1.0), label_fn(sys))?;
        let tr = factor_labelled(&shifted(2.0), label_fn(sys))?;

        let scale = (0..sys.node_count())
            .map(|k| (sys.sources()[k] / g.diagonal(k)).abs())
            .chain(
                sys.node_potentials::<f64>(&vec![0.0; sys.node_count()], 1.0)
                    .into_iter()
                    .map(f64::abs),
            )
            .fold(0.0, f64::max);

        let mut stepper = Self {
            sys,
            dt,
            be,
            tr,
            steps_taken: 0,
            v: vec![0.0; sys.node_count()],
            power: 0.0,
            energy: sys.pinned_step_energy(),
            bound: 1e6 * scale,
        };
        stepper.power = stepper.instantaneous_power();
        Ok(stepper)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.steps_taken as f64 * self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Unknown-net voltages at the current sample.
    pub fn unknowns(&self) -> &[f64] {
        &self.v
    }

    pub fn node_voltages(&self) -> Vec<f64> {
        self.sys.node_potentials(&self.v, 1.0)
    }

    /// Capacitor current of every unknown net, `src − G·v` by KCL.
    fn net_cap_currents(&self) -> Vec<f64> {
        let gv = self.sys.conductance_matrix().mul_vec(&self.v);
        self.sys.sources().iter().zip(gv).map(|(s, g)| s - g).collect()
    }

    pub fn column_currents(&self) -> Vec<f64> {
        let pot = self.node_voltages();
        let caps = self.sys.split_net_cap_currents(&self.net_cap_currents());
        self.sys.probe_currents(&pot, &caps, 1.0)
    }

    fn instantaneous_power(&self) -> f64 {
        let pot = self.node_voltages();
        let caps = self.sys.split_net_cap_currents(&self.net_cap_currents());
        self.sys.source_power(&pot, &caps, 1.0)
    }

    /// Total source power at the current sample (W).
    pub fn power(&self) -> f64 {
        self.power
    }

    /// Energy delivered by the sources since the step (J).
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn step(&mut self) -> Result<()> {
        let sys = self.sys;
        let c = sys.capacitance();
        let backward_euler = self.steps_taken < STARTUP_BE_STEPS;
        let next = if backward_euler {
            let rhs: Vec<f64> = sys
                .sources()
                .iter()
                .zip(c)
                .zip(&self.v)
                .map(|((s, c), v)| s + c / self.dt * v)
                .collect();
            self.be.solve(&rhs)
        } else {
            let gv = sys.conductance_matrix().mul_vec(&self.v);
            let rhs: Vec<f64> = sys
                .sources()
                .iter()
                .zip(c)
                .zip(&self.v)
                .zip(gv)
                .map(|(((s, c), v), gv)| 2.0 * s + 2.0 * c / self.dt * v - gv)
                .collect();
            self.tr.solve(&rhs)
        };

        let t_next = (self.steps_taken + 1) as f64 * self.dt;
        if let Some(bad) = next.iter().find(|x| !x.is_finite()) {
            return Err(Error::StepRejected {
                time: t_next,
                reason: format!("non-finite node voltage {bad}"),
            });
        }
        if self.bound > 0.0 && next.iter().any(|x| x.abs() > self.bound) {
            return Err(Error::StepRejected {
                time: t_next,
                reason: format!("node voltage exceeded divergence bound {:e} V", self.bound),
            });
        }

        self.v = next;
        self.steps_taken += 1;
        let p_prev = self.power;
        self.power = self.instantaneous_power();
        self.energy += if backward_euler {
            self.dt * self.power
        } else {
            0.5 * self.dt * (p_prev + self.power)
        };
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    pub times: Vec<f64>,
    /// Physical node potentials per sample.
    pub node_voltages: Vec<Vec<f64>>,
    /// Probe (column) currents per sample.
    pub column_currents: Vec<Vec<f64>>,
    /// Total source power per sample.
    pub source_power: Vec<f64>,
    /// Energy delivered over the whole run.
    pub energy: f64,
}

/// Step response sampled every `dt` up to `t_end`.
pub fn solve_transient(sys: &NodalSystem, t_end: f64, dt: f64) -> Result<TransientResult> {
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(Error::invalid(format!("t_end must be > 0, got {t_end}")));
    }
    if !dt.is_finite() || dt <= 0.0 || dt > t_end {
        return Err(Error::invalid(format!(
            "time step must satisfy 0 < dt <= t_end, got dt = {dt:e}, t_end = {t_end:e}"
        )));
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    let mut stepper = TransientStepper::new(sys, dt)?;
    let mut out = TransientResult {
        times: Vec::with_capacity(steps + 1),
        node_voltages: Vec::with_capacity(steps + 1),
        column_currents: Vec::with_capacity(steps + 1),
        source_power: Vec::with_capacity(steps + 1),
        energy: 0.0,
    };
    let record = |s: &TransientStepper, out: &mut TransientResult| {
        out.times.push(s.time());
        out.node_voltages.push(s.node_voltages());
        out.column_currents.push(s.column_currents());
        out.source_power.push(s.power());
    };
    record(&stepper, &mut out);
    for _ in 0..steps {
        stepper.step()?;
        record(&stepper, &mut out);
    }
    out.energy = stepper.energy();
    Ok(out)
}
