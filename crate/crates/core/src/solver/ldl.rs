//! Up-looking sparse LDLᵀ factorization.
//!
//! Symbolic analysis builds the elimination tree and column counts of `L`;
//! the numeric phase computes one row of `L` per step by a sparse triangular
//! solve along the tree. No pivoting is performed, so the input must be
//! symmetric positive definite (real case) or complex symmetric with a
//! positive definite real part (`G + jωC`).

use super::{Scalar, SymMatrix};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Pivots smaller than this fraction of the original diagonal are rejected.
pub const PIVOT_REL_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct LdlFactor<T> {
    n: usize,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<T>,
    d: Vec<T>,
}

/// Failure location reported by [`LdlFactor::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotFailure {
    pub index: usize,
    pub value: f64,
}

impl<T: Scalar> LdlFactor<T> {
    pub fn new(a: &SymMatrix<T>) -> std::result::Result<Self, PivotFailure> {
        let n = a.dim();
        let ap = a.col_ptr();
        let ai = a.row_idx();
        let ax = a.values();

        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &row in &ai[ap[k]..ap[k + 1]] {
                let mut i = row;
                if i >= k {
                    continue;
                }
                while flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut l_ptr = vec![0usize; n + 1];
        for k in 0..n {
            l_ptr[k + 1] = l_ptr[k] + lnz[k];
        }

        let nnz = l_ptr[n];
        let mut l_idx = vec![0usize; nnz];
        let mut l_val = vec![T::zero(); nnz];
        let mut d = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        let mut pattern = vec![0usize; n];
        lnz.iter_mut().for_each(|c| *c = 0);
        flag.iter_mut().for_each(|f| *f = NONE);

        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for p in ap[k]..ap[k + 1] {
                let mut i = ai[p];
                y[i] += ax[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            let scale = a.diagonal(k).modulus();
            d[k] = y[k];
            y[k] = T::zero();
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = T::zero();
                let end = l_ptr[i] + lnz[i];
                for p in l_ptr[i]..end {
                    let r = l_idx[p];
                    y[r] -= l_val[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                l_idx[end] = k;
                l_val[end] = l_ki;
                lnz[i] += 1;
            }
            if !d[k].pivot_ok(scale * PIVOT_REL_TOL) {
                return Err(PivotFailure {
                    index: k,
                    value: d[k].modulus(),
                });
            }
        }

        Ok(Self {
            n,
            l_ptr,
            l_idx,
            l_val,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.l_idx.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "right-hand side length must match dimension");
        let mut x = b.to_vec();
        for j in 0..self.n {
            let xj = x[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                x[self.l_idx[p]] -= self.l_val[p] * xj;
            }
        }
        for (xj, &dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..self.n).rev() {
            let mut acc = x[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                acc -= self.l_val[p] * x[self.l_idx[p]];
            }
            x[j] = acc;
        }
        x
    }
}

/// Factorizes and converts a pivot failure into a labelled error.
pub(crate) fn factor_labelled<T: Scalar>(
    a: &SymMatrix<T>,
    label: impl Fn(usize) -> String,
) -> Result<LdlFactor<T>> {
    LdlFactor::new(a).map_err(|f| Error::Singular {
        pivot: f.index,
        label: label(f.index),
        value: f.value,
    })
}
