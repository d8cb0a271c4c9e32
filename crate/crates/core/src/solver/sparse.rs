//! Compressed storage for symmetric matrices.

use nalgebra::DMatrix;

use super::Scalar;

/// Symmetric matrix stored as its upper triangle in compressed-column form.
///
/// Column `j` holds rows `i <= j` in increasing order. Every diagonal entry is
/// structurally present, even when numerically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T = f64> {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    /// Builds from `(row, col, value)` triplets; entries below the diagonal are
    /// mirrored into the upper triangle and duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut entries: Vec<(usize, usize, T)> = triplets
            .iter()
            .map(|&(i, j, v)| if i <= j { (j, i, v) } else { (i, j, v) })
            .collect();
        // (col, row) order
        entries.extend((0..n).map(|k| (k, k, T::zero())));
        entries.sort_by_key(|e| (e.0, e.1));

        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (col, row, v) in entries {
            if last == Some((col, row)) {
                let tail = values.last_mut().expect("non-empty after first entry");
                *tail += v;
            } else {
                row_idx.push(row);
                values.push(v);
                col_ptr[col + 1] += 1;
                last = Some((col, row));
            }
        }
        for k in 0..n {
            col_ptr[k + 1] += col_ptr[k];
        }
        Self {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_upper(&self) -> usize {
        self.values.len()
    }

    pub(crate) fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub(crate) fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub(crate) fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (row, col) = if i <= j { (i, j) } else { (j, i) };
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[range.clone()].binary_search(&row) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self, k: usize) -> T {
        // diagonal is the last stored entry of its column
        self.values[self.col_ptr[k + 1] - 1]
    }

    /// Same pattern, element-wise transformed values.
    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SymMatrix<U> {
        SymMatrix {
            n: self.n,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add_to_diagonal(&mut self, diag: &[T]) {
        assert_eq!(diag.len(), self.n, "diagonal length must match dimension");
        for (k, &d) in diag.iter().enumerate() {
            let p = self.col_ptr[k + 1] - 1;
            self.values[p] += d;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n, "vector length must match dimension");
        let mut y = vec![T::zero(); self.n];
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[p];
                let v = self.values[p];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::from_element(self.n, self.n, T::zero());
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[p];
                m[(i, j)] = self.values[p];
                m[(j, i)] = self.values[p];
            }
        }
        m
    }
}
