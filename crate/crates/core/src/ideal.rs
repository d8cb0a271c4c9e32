//! Closed-form dot products of a parasitic-free crossbar.

use serde::{Deserialize, Serialize};

use crate::device::MemristorDevice;
use crate::error::{ensure_finite, Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealOutput {
    /// Current out of every column (A).
    pub column_currents: Vec<f64>,
}

impl IdealOutput {
    pub fn new(column_currents: Vec<f64>) -> Result<Self> {
        for &i in &column_currents {
            ensure_finite("column current", i)?;
        }
        Ok(Self { column_currents })
    }

    pub fn len(&self) -> usize {
        self.column_currents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.column_currents.is_empty()
    }
}

fn check_len(g: &Grid, input: &[f64], what: &'static str) -> Result<()> {
    if input.len() != g.rows() {
        return Err(Error::DimensionMismatch {
            what,
            expected: g.rows(),
            found: input.len(),
        });
    }
    for &x in input {
        ensure_finite(what, x)?;
    }
    Ok(())
}

/// `I_j = Σ_i g_ij · V_i`: voltage-driven rows into virtually grounded columns.
pub fn ideal_voltage_mode(g: &Grid, v_in: &[f64]) -> Result<IdealOutput> {
    check_len(g, v_in, "input voltage vector")?;
    let mut out = vec![0.0; g.cols()];
    for (i, &v) in v_in.iter().enumerate() {
        for (o, &gij) in out.iter_mut().zip(g.row(i)) {
            *o += gij * v;
        }
    }
    IdealOutput::new(out)
}

/// `I_j = Σ_i I_i · g_ij / Σ_k g_ik`: each row current divides among the
/// columns in proportion to the row's conductances.
pub fn ideal_current_mode(g: &Grid, i_in: &[f64]) -> Result<IdealOutput> {
    check_len(g, i_in, "input current vector")?;
    let mut out = vec![0.0; g.cols()];
    for (i, &cur) in i_in.iter().enumerate() {
        let row = g.row(i);
        let sum: f64 = row.iter().sum();
        if sum.is_nan() || sum <= 0.0 {
            return Err(Error::invalid(format!(
                "row {i} has conductance sum {sum:e}, the current divider needs a positive sum"
            )));
        }
        for (o, &gij) in out.iter_mut().zip(row) {
            *o += cur * gij / sum;
        }
    }
    IdealOutput::new(out)
}

/// Sets `g[i][free_column]` in every row so each row sums to `target`.
///
/// Rows already within a few ulps of the target are left untouched. Fails
/// on the first row whose free cell would leave the device range.
pub fn normalize_row_conductances(
    g: &Grid,
    target: f64,
    free_column: usize,
    device: &MemristorDevice,
) -> Result<Grid> {
    ensure_finite("row conductance target", target)?;
    if free_column >= g.cols() {
        return Err(Error::invalid(format!(
            "free column {free_column} out of range for {} columns",
            g.cols()
        )));
    }
    let mut out = g.clone();
    for i in 0..g.rows() {
        let row = g.row(i);
        let total: f64 = row.iter().sum();
        if (total - target).abs() <= 4.0 * f64::EPSILON * target.abs() {
            continue;
        }
        let fixed: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != free_column)
            .map(|(_, &v)| v)
            .sum();
        let required = target - fixed;
        if !device.contains(required) {
            return Err(Error::InfeasibleNormalization {
                row: i,
                required,
                min: device.g_off,
                max: device.g_on,
            });
        }
        out.set(i, free_column, required);
    }
    Ok(out)
}

/// Mean absolute column error divided by the mean ideal magnitude.
pub fn dot_product_error(actual: &IdealOutput, ideal: &IdealOutput) -> Result<f64> {
    if actual.len() != ideal.len() {
        return Err(Error::DimensionMismatch {
            what: "output vectors",
            expected: ideal.len(),
            found: actual.len(),
        });
    }
    let scale: f64 = ideal.column_currents.iter().map(|x| x.abs()).sum();
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::invalid("ideal output is all zero, relative error undefined"));
    }
    let diff: f64 = actual
        .column_currents
        .iter()
        .zip(&ideal.column_currents)
        .map(|(a, b)| (a - b).abs())
        .sum();
    // both means share the same 1/n
    Ok(diff / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn device() -> MemristorDevice {
        MemristorDevice::new(1e-5, 1e-3, 1.0, 1.0).unwrap()
    }

    #[test]
    fn voltage_mode_example() {
        let g = Grid::from_rows(vec![vec![1e-4, 2e-4], vec![3e-4, 4e-4]]).unwrap();
        let out = ideal_voltage_mode(&g, &[1.0, 0.5]).unwrap();
        assert_relative_eq!(out.column_currents[0], 2.5e-4, max_relative = 1e-15);
        assert_relative_eq!(out.column_currents[1], 4e-4, max_relative = 1e-15);
        let zero = ideal_voltage_mode(&g, &[0.0, 0.0]).unwrap();
        assert!(zero.column_currents.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn current_mode_example() {
        let g = Grid::from_rows(vec![vec![1e-4, 1e-4], vec![2e-4, 2e-4]]).unwrap();
        let out = ideal_current_mode(&g, &[1e-6, 2e-6]).unwrap();
        assert_relative_eq!(out.column_currents[0], 1.5e-6, max_relative = 1e-15);
        assert_relative_eq!(out.column_currents[1], 1.5e-6, max_relative = 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let g = Grid::filled(2, 3, 1e-4).unwrap();
        assert!(matches!(
            ideal_voltage_mode(&g, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1, .. })
        ));
        assert!(ideal_current_mode(&g, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn zero_row_sum_rejected() {
        let g = Grid::from_rows(vec![vec![0.0, 0.0], vec![1e-4, 1e-4]]).unwrap();
        assert!(ideal_current_mode(&g, &[1e-6, 1e-6]).is_err());
    }

    #[test]
    fn normalization_examples() {
        let g = Grid::from_rows(vec![vec![1e-4, 2e-4, 5e-5]]).unwrap();
        let n = normalize_row_conductances(&g, 5e-4, 2, &device()).unwrap();
        assert_relative_eq!(n.get(0, 2), 2e-4, max_relative = 1e-12);
        assert_eq!(n.get(0, 0), 1e-4);
        assert_eq!(n.get(0, 1), 2e-4);

        let fixed = normalize_row_conductances(&n, 5e-4, 2, &device()).unwrap();
        assert_eq!(fixed, n);

        match normalize_row_conductances(&g, 2e-4, 2, &device()) {
            Err(Error::InfeasibleNormalization { row: 0, .. }) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(normalize_row_conductances(&g, 5e-4, 3, &device()).is_err());
    }

    #[test]
    fn error_examples() {
        let ideal = IdealOutput::new(vec![1e-6, -2e-6, 3e-6]).unwrap();
        assert_eq!(dot_product_error(&ideal, &ideal).unwrap(), 0.0);
        let scaled = IdealOutput::new(ideal.column_currents.iter().map(|x| 1.1 * x).collect()).unwrap();
        assert_relative_eq!(dot_product_error(&scaled, &ideal).unwrap(), 0.1, max_relative = 1e-12);
        let zero = IdealOutput::new(vec![0.0; 3]).unwrap();
        assert!(dot_product_error(&ideal, &zero).is_err());
    }

    fn grid_and_vectors(max_n: usize) -> impl Strategy<Value = (Grid, Vec<f64>, Vec<f64>)> {
        (1..=max_n, 1..=max_n).prop_flat_map(|(r, c)| {
            (
                prop::collection::vec(1e-5f64..1e-3, r * c),
                prop::collection::vec(-1.0f64..1.0, r),
                prop::collection::vec(-1.0f64..1.0, r),
            )
                .prop_map(move |(g, a, b)| (Grid::new(r, c, g).unwrap(), a, b))
        })
    }

    proptest! {
        #[test]
        fn voltage_mode_is_linear((g, a, b) in grid_and_vectors(6), k in -3.0f64..3.0) {
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let ya = ideal_voltage_mode(&g, &a).unwrap().column_currents;
            let yb = ideal_voltage_mode(&g, &b).unwrap().column_currents;
            let ys = ideal_voltage_mode(&g, &sum).unwrap().column_currents;
            let scaled: Vec<f64> = a.iter().map(|x| k * x).collect();
            let yk = ideal_voltage_mode(&g, &scaled).unwrap().column_currents;
            let tol = 1e-14 * g.as_slice().iter().sum::<f64>();
            for j in 0..g.cols() {
                prop_assert!((ys[j] - ya[j] - yb[j]).abs() <= tol);
                prop_assert!((yk[j] - k * ya[j]).abs() <= tol);
            }
        }

        #[test]
        fn current_mode_conserves((g, a, _) in grid_and_vectors(6)) {
            let out = ideal_current_mode(&g, &a).unwrap();
            let total_in: f64 = a.iter().sum();
            let total_out: f64 = out.column_currents.iter().sum();
            let mag: f64 = a.iter().map(|x| x.abs()).sum();
            prop_assert!((total_out - total_in).abs() <= 1e-14 * mag.max(1e-300));
        }

        #[test]
        fn normalized_rows_share_the_target((g, _, _) in grid_and_vectors(6)) {
            let dev = MemristorDevice::new(1e-6, 1e-2, 1.0, 1.0).unwrap();
            let free = g.cols() - 1;
            let fixed_max = (0..g.rows())
                .map(|i| g.row(i)[..free].iter().sum::<f64>())
                .fold(0.0, f64::max);
            let target = fixed_max + 5e-4;
            let n = normalize_row_conductances(&g, target, free, &dev).unwrap();
            for i in 0..g.rows() {
                let s: f64 = n.row(i).iter().sum();
                prop_assert!((s - target).abs() <= 1e-12 * target);
                prop_assert_eq!(&n.row(i)[..free], &g.row(i)[..free]);
            }
        }

        #[test]
        fn error_is_scale_invariant(
            v in prop::collection::vec(0.1f64..1.0, 1..8),
            d in prop::collection::vec(-0.1f64..0.1, 8),
            k in 1e-9f64..1e9,
        ) {
            let ideal = IdealOutput::new(v.clone()).unwrap();
            let actual = IdealOutput::new(v.iter().zip(&d).map(|(x, e)| x + e).collect()).unwrap();
            let e1 = dot_product_error(&actual, &ideal).unwrap();
            let ks = |o: &IdealOutput| IdealOutput::new(o.column_currents.iter().map(|x| k * x).collect()).unwrap();
            let e2 = dot_product_error(&ks(&actual), &ks(&ideal)).unwrap();
            prop_assert!((e1 - e2).abs() <= 1e-12 * e1.max(1e-300));
            prop_assert_eq!(e1 == 0.0, actual == ideal);
        }
    }
}
