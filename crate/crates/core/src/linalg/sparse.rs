use rayon::prelude::*;

use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, T)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|&&(i, j, _)| i >= rows || j >= cols) {
            return Err(Error::arg(format!(
                "triplet ({i}, {j}) outside {rows}x{cols}"
            )));
        }
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((i, j));
            indices.push(j);
            values.push(v);
            indptr[i + 1] += 1;
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn from_dense(m: &DenseMatrix<T>) -> Self {
        let mut triplets = Vec::new();
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != T::zero() {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), triplets).expect("indices in range")
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (idx, vals) = self.row(i);
        idx.binary_search(&j).map_or(T::zero(), |p| vals[p])
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).1.iter().copied().sum()).collect()
    }

    /// `self · x`
    pub fn spmm(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.cols != x.rows() {
            return Err(Error::shape("spmm", self.shape(), x.shape()));
        }
        let d = x.cols();
        let mut out = DenseMatrix::zeros(self.rows, d);
        if d == 0 {
            return Ok(out);
        }
        let kernel = |(i, out_row): (usize, &mut [T])| {
            let (idx, vals) = self.row(i);
            for (&j, &a) in idx.iter().zip(vals) {
                for (o, &b) in out_row.iter_mut().zip(x.row(j)) {
                    *o += a * b;
                }
            }
        };
        if self.nnz() * d >= 1 << 16 {
            out.data_mut().par_chunks_mut(d).enumerate().for_each(kernel);
        } else {
            out.data_mut().chunks_mut(d).enumerate().for_each(kernel);
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            triplets.extend(idx.iter().zip(vals).map(|(&j, &v)| (j, i, v)));
        }
        Self::from_triplets(self.cols, self.rows, triplets).expect("indices in range")
    }

    /// `selfᵀ · x`
    pub fn spmm_t(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.rows != x.rows() {
            return Err(Error::shape("spmm_t", self.shape(), x.shape()));
        }
        self.transpose().spmm(x)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|i| {
            let (idx, vals) = self.row(i);
            idx.iter()
                .zip(vals)
                .all(|(&j, &v)| (v - self.get(j, i)).abs() <= tol)
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}
