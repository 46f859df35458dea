use rayon::prelude::*;
use serde::Serialize;

use super::{base_distribution, mixed_distribution, wasserstein, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::graph::{bfs_capped, cosine_similarity, Adjacency, Graph};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::nn::sigmoid_scalar;
use crate::scalar::Scalar;

/// Hop cap of the ground metric; farther pairs cost `DISTANCE_CAP + 1`.
pub const DISTANCE_CAP: usize = 4;

fn sorted_intersects(a: &[usize], b: &[usize]) -> bool {
    let (mut p, mut q) = (0, 0);
    while p < a.len() && q < b.len() {
        match a[p].cmp(&b[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Capped hop distance, answered from neighbor lists for up to three hops
/// and by a capped BFS beyond that.
pub fn local_distance(adj: &Adjacency, x: usize, y: usize) -> usize {
    if x == y {
        return 0;
    }
    if adj.has_edge(x, y) {
        return 1;
    }
    let (nx, ny) = (adj.neighbors(x), adj.neighbors(y));
    if sorted_intersects(nx, ny) {
        return 2;
    }
    if nx.iter().any(|&a| sorted_intersects(adj.neighbors(a), ny)) {
        return 3;
    }
    bfs_capped(adj, x, DISTANCE_CAP)
        .get(&y)
        .copied()
        .unwrap_or(DISTANCE_CAP + 1)
}

/// Ground-distance table between the supports of two distributions.
pub fn support_costs(adj: &Adjacency, mu: &DiscreteDistribution, nu: &DiscreteDistribution) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(mu.len(), nu.len(), |a, b| {
        local_distance(adj, mu.support[a], nu.support[b]) as f64
    })
}

/// Classical Ollivier-Ricci curvature `1 − W(m_i, m_j)` of an edge.
pub fn ollivier_curvature(adj: &Adjacency, i: usize, j: usize, alpha: f64) -> Result<f64> {
    if !adj.has_edge(i, j) {
        return Err(Error::arg(format!("{i} and {j} are not adjacent")));
    }
    let mi = base_distribution(adj, i, alpha)?;
    let mj = base_distribution(adj, j, alpha)?;
    let w = wasserstein(&mi, &mj, &support_costs(adj, &mi, &mj))?;
    Ok(1.0 - w)
}

/// Attribute similarity of `i` towards `j`: cosine mapped to `[0, 1]` and
/// scaled by `(1 − δ)·min(1, |N_i ∖ N_j| / k_i)`.
pub fn scaled_similarity<T: Scalar>(g: &Graph<T>, i: usize, j: usize, delta: f64) -> f64 {
    let x = g.attributes();
    let cos = cosine_similarity(x.row(i), x.row(j)).as_f64();
    let ni = g.neighbors(i);
    let uncommon = ni.iter().filter(|&&y| !g.has_edge(j, y)).count();
    let ratio = (uncommon as f64 / ni.len().max(1) as f64).min(1.0);
    ((cos + 1.0) / 2.0).clamp(0.0, 1.0) * (1.0 - delta) * ratio
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeCurvature {
    pub i: usize,
    pub j: usize,
    pub kappa_raw: f64,
    pub kappa_norm: f64,
}

/// Per-edge attribute-mixed curvatures and the curvature-weighted
/// adjacency `C` (unit diagonal, `κ′` on edges).
#[derive(Clone, Debug)]
pub struct CurvatureTable {
    pub records: Vec<EdgeCurvature>,
    pub c: SparseMatrix<f64>,
}

impl CurvatureTable {
    pub fn n(&self) -> usize {
        self.c.rows()
    }

    pub fn c_dense<T: Scalar>(&self) -> DenseMatrix<T> {
        self.c.to_dense().cast()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c.get(i, j)
    }

    fn from_records(n: usize, records: Vec<EdgeCurvature>) -> Result<Self> {
        let mut triplets: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        for r in &records {
            triplets.push((r.i, r.j, r.kappa_norm));
            triplets.push((r.j, r.i, r.kappa_norm));
        }
        Ok(Self {
            records,
            c: SparseMatrix::from_triplets(n, n, triplets)?,
        })
    }
}

fn edge_curvature<T: Scalar>(g: &Graph<T>, i: usize, j: usize, delta: f64) -> Result<EdgeCurvature> {
    let adj = g.adjacency();
    let mi = mixed_distribution(adj, i, j, delta, scaled_similarity(g, i, j, delta))?;
    let mj = mixed_distribution(adj, j, i, delta, scaled_similarity(g, j, i, delta))?;
    let w = wasserstein(&mi, &mj, &support_costs(adj, &mi, &mj))?;
    let kappa_raw = 1.0 - w;
    Ok(EdgeCurvature {
        i,
        j,
        kappa_raw,
        kappa_norm: sigmoid_scalar(kappa_raw),
    })
}

/// Attribute-mixed curvature of every edge, computed in parallel; records
/// come back in `(i, j)`, `i < j` lexicographic order.
pub fn mixed_curvature_table<T: Scalar>(g: &Graph<T>, delta: f64) -> Result<CurvatureTable> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::arg(format!("delta = {delta} outside [0, 1)")));
    }
    let edges: Vec<(usize, usize)> = g.adjacency().edges().collect();
    let records = edges
        .par_iter()
        .map(|&(i, j)| edge_curvature(g, i, j, delta))
        .collect::<Result<Vec<_>>>()?;
    CurvatureTable::from_records(g.n(), records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::hop_distances;
    use crate::graph::synthetic::{two_community, TwoCommunityConfig};
    use crate::linalg::DenseMatrix;

    fn adj(n: usize, e: &[(usize, usize)]) -> Adjacency {
        Adjacency::from_edges(n, e.iter().copied()).unwrap()
    }

    #[test]
    fn isolated_edge() {
        let a = adj(2, &[(0, 1)]);
        assert!((ollivier_curvature(&a, 0, 1, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(ollivier_curvature(&a, 0, 1, 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn triangle() {
        let a = adj(3, &[(0, 1), (1, 2), (0, 2)]);
        assert!((ollivier_curvature(&a, 0, 1, 0.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn local_distance_matches_bfs() {
        let g = two_community::<f64>(&TwoCommunityConfig {
            n: 80,
            p_in: 0.06,
            p_out: 0.01,
            ..TwoCommunityConfig::default()
        })
        .unwrap();
        let a = g.adjacency();
        let sources: Vec<usize> = (0..80).collect();
        let d = hop_distances(a, &sources, DISTANCE_CAP);
        for x in 0..80 {
            for y in 0..80 {
                assert_eq!(local_distance(a, x, y), d.get(x, y), "{x} {y}");
            }
        }
    }

    #[test]
    fn table_shape() {
        let x = DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        let g = Graph::from_edges([(0, 1), (1, 2), (2, 3), (3, 0)], x).unwrap();
        let t = mixed_curvature_table(&g, 0.5).unwrap();
        assert_eq!(t.records.len(), 4);
        for i in 0..4 {
            assert_eq!(t.get(i, i), 1.0);
        }
        assert_eq!(t.get(0, 2), 0.0);
        assert!(t.c.is_symmetric(0.0));
        for r in &t.records {
            assert!(r.kappa_raw <= 1.0 + 1e-12);
            assert!(r.kappa_norm > 0.0 && r.kappa_norm < 1.0);
            // the 4-cycle is edge-transitive
            assert!((r.kappa_raw - t.records[0].kappa_raw).abs() < 1e-12);
        }
    }

    #[test]
    fn sigmoid_preserves_order() {
        let g = two_community::<f64>(&TwoCommunityConfig {
            n: 60,
            ..TwoCommunityConfig::default()
        })
        .unwrap();
        let t = mixed_curvature_table(&g, 0.5).unwrap();
        let mut r = t.records.clone();
        r.sort_by(|a, b| a.kappa_raw.total_cmp(&b.kappa_raw));
        for w in r.windows(2) {
            assert!(w[0].kappa_norm <= w[1].kappa_norm);
        }
    }
}
