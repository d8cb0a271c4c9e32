//! Dense full-pivoting LU reference solver, for differential testing of the
//! sparse path on small systems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{ac_from_unknowns, complex_system, dc_from_unknowns, residual_norm, AcSolution, DcSolution, Scalar};
use crate::error::{Error, Result};
use crate::network::NodalSystem;

/// Largest unknown count the dense oracle accepts.
pub const DENSE_ORACLE_MAX_NODES: usize = 1024;

fn guard(sys: &NodalSystem) -> Result<()> {
    if sys.node_count() > DENSE_ORACLE_MAX_NODES {
        return Err(Error::invalid(format!(
            "dense oracle limited to {DENSE_ORACLE_MAX_NODES} unknowns, system has {}",
            sys.node_count()
        )));
    }
    Ok(())
}

fn dense_solve<T: Scalar>(a: DMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lu = a.full_piv_lu();
    let u = lu.u();
    let head = u[(0, 0)].modulus();
    let tol = n as f64 * f64::EPSILON * head;
    for k in 0..n {
        let pivot = u[(k, k)].modulus();
        if !pivot.is_finite() || pivot <= tol {
            return Err(Error::Singular {
                pivot: k,
                label: format!("elimination step {k}"),
                value: pivot,
            });
        }
    }
    let rhs = DVector::from_column_slice(b);
    let x = lu.solve(&rhs).ok_or_else(|| Error::Singular {
        pivot: n - 1,
        label: format!("elimination step {}", n - 1),
        value: 0.0,
    })?;
    Ok(x.iter().copied().collect())
}

/// Same contract as [`super::solve_dc`], by dense LU with full pivoting.
pub fn dense_oracle_solve(sys: &NodalSystem) -> Result<DcSolution> {
    guard(sys)?;
    let g = sys.conductance_matrix();
    let x = dense_solve(g.to_dense(), sys.sources())?;
    let residual = residual_norm(g, &x, sys.sources());
    Ok(dc_from_unknowns(sys, &x, residual))
}

/// Same contract as [`super::solve_ac`], by dense complex LU.
pub fn dense_oracle_solve_ac(sys: &NodalSystem, frequency: f64) -> Result<AcSolution> {
    guard(sys)?;
    let a = complex_system(sys, frequency);
    let b: Vec<Complex64> = sys.sources().iter().map(|&s| Complex64::from(s)).collect();
    let x = dense_solve(a.to_dense(), &b)?;
    let residual = residual_norm(&a, &x, &b);
    Ok(ac_from_unknowns(sys, frequency, &x, residual))
}
