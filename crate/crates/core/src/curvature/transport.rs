//! Exact discrete optimal transport via the transportation simplex.

use std::collections::VecDeque;

use super::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

const MASS_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-12;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 32;

pub(crate) fn check_inputs(
    mu: &DiscreteDistribution,
    nu: &DiscreteDistribution,
    cost: &DenseMatrix<f64>,
) -> Result<()> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::arg("empty distribution"));
    }
    if cost.shape() != (mu.len(), nu.len()) {
        return Err(Error::shape("wasserstein", (mu.len(), nu.len()), cost.shape()));
    }
    if cost.data().iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::Value("costs must be finite and nonnegative".into()));
    }
    let gap = (mu.total() - nu.total()).abs();
    if gap > MASS_TOL {
        return Err(Error::Value(format!("total masses differ by {gap:e}")));
    }
    Ok(())
}

/// Basis of the transportation problem: `m + n − 1` cells forming a
/// spanning tree of the bipartite row/column graph.
struct Basis {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
}

impl Basis {
    fn north_west(supply: &[f64], demand: &[f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        loop {
            let x = if i == m - 1 && j == n - 1 { s[i].max(0.0) } else { s[i].min(d[j]).max(0.0) };
            cells.push((i, j));
            flow.push(x);
            s[i] -= x;
            d[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { m, n, cells, flow }
    }

    /// Tree adjacency; rows are nodes `0..m`, columns `m..m + n`.
    fn tree(&self) -> Vec<Vec<(usize, usize)>> {
        let mut t = vec![Vec::new(); self.m + self.n];
        for (e, &(i, j)) in self.cells.iter().enumerate() {
            t[i].push((self.m + j, e));
            t[self.m + j].push((i, e));
        }
        t
    }

    fn potentials(&self, tree: &[Vec<(usize, usize)>], cost: &DenseMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
        let mut pot = vec![f64::NAN; self.m + self.n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0]);
        while let Some(a) = queue.pop_front() {
            for &(b, e) in &tree[a] {
                if pot[b].is_nan() {
                    let (i, j) = self.cells[e];
                    pot[b] = cost[(i, j)] - pot[a];
                    queue.push_back(b);
                }
            }
        }
        let v = pot.split_off(self.m);
        (pot, v)
    }

    /// Basis cells on the tree path from row `i` to column `j`, in order.
    fn path(&self, tree: &[Vec<(usize, usize)>], i: usize, j: usize) -> Vec<usize> {
        let target = self.m + j;
        let mut parent = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        seen[i] = true;
        let mut queue = VecDeque::from([i]);
        while let Some(a) = queue.pop_front() {
            if a == target {
                break;
            }
            for &(b, e) in &tree[a] {
                if !seen[b] {
                    seen[b] = true;
                    parent[b] = Some((a, e));
                    queue.push_back(b);
                }
            }
        }
        let mut edges = Vec::new();
        let mut at = target;
        while let Some((prev, e)) = parent[at] {
            edges.push(e);
            at = prev;
        }
        edges.reverse();
        edges
    }
}

/// Exact 1-Wasserstein distance between two distributions, where
/// `cost[(a, b)]` is the ground distance between `mu.support[a]` and
/// `nu.support[b]`.
pub fn wasserstein(mu: &DiscreteDistribution, nu: &DiscreteDistribution, cost: &DenseMatrix<f64>) -> Result<f64> {
    check_inputs(mu, nu, cost)?;
    let mut basis = Basis::north_west(&mu.mass, &nu.mass);
    let (m, n) = (basis.m, basis.n);
    let max_iter = 50 * (m + n) * (m + n) + 100;
    let mut degenerate = 0;
    let mut bland = false;

    for _ in 0..max_iter {
        let tree = basis.tree();
        let (u, v) = basis.potentials(&tree, cost);
        let mut in_basis = vec![false; m * n];
        for &(i, j) in &basis.cells {
            in_basis[i * n + j] = true;
        }

        let mut entering = None;
        let mut best = -REDUCED_COST_TOL;
        'scan: for i in 0..m {
            for j in 0..n {
                if in_basis[i * n + j] {
                    continue;
                }
                let r = cost[(i, j)] - u[i] - v[j];
                if r < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok(basis
                .cells
                .iter()
                .zip(&basis.flow)
                .map(|(&(i, j), &x)| cost[(i, j)] * x)
                .sum());
        };

        // Cycle: entering cell (+), then path cells alternating −, +, −, …
        let path = basis.path(&tree, ei, ej);
        let mut leave = None;
        let mut theta = f64::INFINITY;
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                let x = basis.flow[e];
                let better = match leave {
                    None => true,
                    Some(l) => x < theta || (x == theta && basis.cells[e] < basis.cells[l]),
                };
                if better {
                    theta = x;
                    leave = Some(e);
                }
            }
        }
        let leave = leave.expect("cycle has a decreasing cell");
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis.flow[e] -= theta;
            } else {
                basis.flow[e] += theta;
            }
        }
        basis.cells[leave] = (ei, ej);
        basis.flow[leave] = theta;

        if theta <= 0.0 {
            degenerate += 1;
            if degenerate >= DEGENERATE_LIMIT {
                bland = true;
            }
        } else {
            degenerate = 0;
        }
    }
    Err(Error::Value(format!("transport simplex did not converge in {max_iter} pivots")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(mass: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new((0..mass.len()).collect(), mass.to_vec()).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let mu = dist(&[0.2, 0.3, 0.5]);
        let c = DenseMatrix::from_fn(3, 3, |a, b| (a as f64 - b as f64).abs());
        assert!(wasserstein(&mu, &mu, &c).unwrap().abs() < 1e-15);
    }

    #[test]
    fn point_masses() {
        let c = DenseMatrix::from_rows(&[[3.0]]).unwrap();
        assert_eq!(wasserstein(&dist(&[1.0]), &dist(&[1.0]), &c).unwrap(), 3.0);
    }

    #[test]
    fn isolated_edge() {
        // supports [i, j] and [j, i]; W = |1 − 2α|
        for alpha in [0.0, 0.25, 0.5, 0.9] {
            let mu = DiscreteDistribution::new(vec![0, 1], vec![alpha, 1.0 - alpha]).unwrap();
            let nu = DiscreteDistribution::new(vec![1, 0], vec![alpha, 1.0 - alpha]).unwrap();
            let c = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
            let w = wasserstein(&mu, &nu, &c).unwrap();
            assert!((w - (1.0 - 2.0 * alpha).abs()).abs() < 1e-12, "{alpha}: {w}");
        }
    }

    #[test]
    fn mass_mismatch() {
        let c = DenseMatrix::zeros(1, 1);
        let mu = DiscreteDistribution::new(vec![0], vec![0.5]).unwrap();
        assert!(matches!(wasserstein(&mu, &dist(&[1.0]), &c), Err(Error::Value(_))));
    }

    #[test]
    fn degenerate_masses() {
        let mu = dist(&[0.5, 0.0, 0.5, 0.0]);
        let nu = dist(&[0.0, 0.5, 0.0, 0.5]);
        let c = DenseMatrix::from_fn(4, 4, |a, b| (a as f64 - b as f64).abs());
        assert!((wasserstein(&mu, &nu, &c).unwrap() - 1.0).abs() < 1e-12);
    }
}
