//! DC, AC and transient solution of an assembled [`NodalSystem`].

mod dense;
mod ldl;
mod sparse;
mod transient;

use std::f64::consts::PI;

use nalgebra::ComplexField;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::NodalSystem;

pub use dense::{dense_oracle_solve, dense_oracle_solve_ac, DENSE_ORACLE_MAX_NODES};
pub use ldl::{LdlFactor, PivotFailure, PIVOT_REL_TOL};
pub use sparse::SymMatrix;
pub use transient::{
    default_time_step, dominant_time_constant, solve_transient, TransientResult, TransientStepper,
    STEPS_PER_TIME_CONSTANT,
};

/// Field the solvers run over: `f64` for DC and transient, `Complex64` for AC.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    /// Whether `self` is usable as an elimination pivot given an absolute
    /// tolerance. Real systems must stay positive definite.
    fn pivot_ok(self, tol: f64) -> bool;
}

impl Scalar for f64 {
    fn pivot_ok(self, tol: f64) -> bool {
        self.is_finite() && self > tol
    }
}

impl Scalar for Complex64 {
    fn pivot_ok(self, tol: f64) -> bool {
        self.is_finite() && self.norm() > tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcSolution {
    /// Potential of every physical node, ground included (V).
    pub node_voltages: Vec<f64>,
    /// Current leaving each column through its terminal (A).
    pub column_currents: Vec<f64>,
    /// Current delivered by each excitation (A).
    pub source_currents: Vec<f64>,
    /// ‖G·v − src‖₂ over the unknown nets.
    pub residual: f64,
}

impl DcSolution {
    pub fn source_power(&self, sys: &NodalSystem) -> f64 {
        let zeros = vec![0.0; self.node_voltages.len()];
        sys.source_power(&self.node_voltages, &zeros, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcSolution {
    pub frequency: f64,
    pub node_phasors: Vec<Complex64>,
    pub column_phasors: Vec<Complex64>,
    /// ‖(G + jωC)·v − src‖₂ over the unknown nets.
    pub residual: f64,
}

fn residual_norm<T: Scalar>(a: &SymMatrix<T>, x: &[T], b: &[T]) -> f64 {
    a.mul_vec(x)
        .iter()
        .zip(b)
        .map(|(&ax, &bi)| (ax - bi).modulus_squared())
        .sum::<f64>()
        .sqrt()
}

/// Solves with one step of iterative refinement.
fn refined_solve<T: Scalar>(a: &SymMatrix<T>, f: &LdlFactor<T>, b: &[T]) -> (Vec<T>, f64) {
    let mut x = f.solve(b);
    let r: Vec<T> = a.mul_vec(&x).iter().zip(b).map(|(&ax, &bi)| bi - ax).collect();
    for (xi, di) in x.iter_mut().zip(f.solve(&r)) {
        *xi += di;
    }
    let res = residual_norm(a, &x, b);
    (x, res)
}

pub(crate) fn label_fn(sys: &NodalSystem) -> impl Fn(usize) -> String + '_ {
    move |k| sys.unknown_label(k)
}

/// Operating point by sparse LDLᵀ.
pub fn solve_dc(sys: &NodalSystem) -> Result<DcSolution> {
    let g = sys.conductance_matrix();
    let factor = ldl::factor_labelled(g, label_fn(sys))?;
    let (x, residual) = refined_solve(g, &factor, sys.sources());
    Ok(dc_from_unknowns(sys, &x, residual))
}

pub(crate) fn dc_from_unknowns(sys: &NodalSystem, x: &[f64], residual: f64) -> DcSolution {
    let node_voltages = sys.node_potentials(x, 1.0);
    let zeros = vec![0.0; node_voltages.len()];
    DcSolution {
        column_currents: sys.probe_currents(&node_voltages, &zeros, 1.0),
        source_currents: sys.excitation_currents(&node_voltages, &zeros, 1.0),
        node_voltages,
        residual,
    }
}

/// Phasor solution at `frequency` Hz with every excitation as a unit-phase
/// amplitude.
pub fn solve_ac(sys: &NodalSystem, frequency: f64) -> Result<AcSolution> {
    if !frequency.is_finite() || frequency < 0.0 {
        return Err(Error::invalid(format!(
            "frequency must be finite and >= 0, got {frequency}"
        )));
    }
    let a = complex_system(sys, frequency);
    let b: Vec<Complex64> = sys.sources().iter().map(|&s| Complex64::from(s)).collect();
    let factor = ldl::factor_labelled(&a, label_fn(sys))?;
    let (x, residual) = refined_solve(&a, &factor, &b);
    Ok(ac_from_unknowns(sys, frequency, &x, residual))
}

pub(crate) fn complex_system(sys: &NodalSystem, frequency: f64) -> SymMatrix<Complex64> {
    let omega = 2.0 * PI * frequency;
    let mut a = sys.conductance_matrix().map(Complex64::from);
    let jwc: Vec<Complex64> = sys
        .capacitance()
        .iter()
        .map(|&c| Complex64::new(0.0, omega * c))
        .collect();
    a.add_to_diagonal(&jwc);
    a
}

pub(crate) fn ac_from_unknowns(
    sys: &NodalSystem,
    frequency: f64,
    x: &[Complex64],
    residual: f64,
) -> AcSolution {
    let j_omega = Complex64::new(0.0, 2.0 * PI * frequency);
    let node_phasors = sys.node_potentials(x, 1.0);
    let caps = sys.phasor_cap_currents(&node_phasors, j_omega);
    AcSolution {
        frequency,
        column_phasors: sys.probe_currents(&node_phasors, &caps, 1.0),
        node_phasors,
        residual,
    }
}
