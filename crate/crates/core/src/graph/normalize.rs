use serde::{Deserialize, Serialize};

use super::{Adjacency, Graph};
use crate::linalg::SparseMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjKind {
    /// `D̃^(-1/2) (A + I) D̃^(-1/2)`
    SelfLoopSym,
    /// `D^(-1/2) A D^(-1/2)`; isolated nodes get an all-zero row.
    NoneSym,
}

/// Symmetrically normalized adjacency operator.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdj<T> {
    pub matrix: SparseMatrix<T>,
    pub kind: AdjKind,
}

impl<T: Scalar> NormalizedAdj<T> {
    pub fn n(&self) -> usize {
        self.matrix.rows()
    }
}

pub fn normalize_adjacency<T: Scalar>(g: &Graph<T>) -> NormalizedAdj<T> {
    normalize_pattern(g.adjacency(), AdjKind::SelfLoopSym)
}

pub fn normalize_pattern<T: Scalar>(adj: &Adjacency, kind: AdjKind) -> NormalizedAdj<T> {
    let n = adj.len();
    let self_loop = matches!(kind, AdjKind::SelfLoopSym);
    let inv_sqrt: Vec<T> = (0..n)
        .map(|i| {
            let d = adj.degree(i) + usize::from(self_loop);
            if d == 0 {
                T::zero()
            } else {
                T::one() / T::from_usize_lossy(d).sqrt()
            }
        })
        .collect();
    let mut triplets = Vec::with_capacity(2 * adj.num_edges() + n);
    for i in 0..n {
        if self_loop {
            triplets.push((i, i, inv_sqrt[i] * inv_sqrt[i]));
        }
        for &j in adj.neighbors(i) {
            triplets.push((i, j, inv_sqrt[i] * inv_sqrt[j]));
        }
    }
    NormalizedAdj {
        matrix: SparseMatrix::from_triplets(n, n, triplets).expect("indices within n"),
        kind,
    }
}
