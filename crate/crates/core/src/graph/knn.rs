use std::cmp::Ordering;

use rayon::prelude::*;

use super::Adjacency;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> T {
    let (mut ab, mut aa, mut bb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == T::zero() || bb == T::zero() {
        T::zero()
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

/// Symmetric kNN graph under cosine similarity: `i ~ t` iff `t` is among the
/// `k` most similar rows to `i` or vice versa. Ties go to the lower index.
pub fn knn_graph<T: Scalar>(features: &DenseMatrix<T>, k: usize) -> Result<Adjacency> {
    let n = features.rows();
    if k == 0 || k >= n {
        return Err(Error::arg(format!("k = {k} must satisfy 1 ≤ k < n = {n}")));
    }
    let unit: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let row = features.row(i);
            let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm == T::zero() {
                vec![T::zero(); row.len()]
            } else {
                row.iter().map(|&v| v / norm).collect()
            }
        })
        .collect();
    let top: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(T, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let s = unit[i].iter().zip(&unit[j]).map(|(&a, &b)| a * b).sum::<T>();
                    (s, j)
                })
                .collect();
            let by_rank = |a: &(T, usize), b: &(T, usize)| {
                b.0.partial_cmp(&a.0)
                    .unwrap_or(Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            };
            cand.select_nth_unstable_by(k - 1, by_rank);
            cand.truncate(k);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Adjacency::from_edges(
        n,
        top.iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().map(move |&j| (i, j))),
    )
}
