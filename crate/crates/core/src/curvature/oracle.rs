//! Brute-force transport solver used to cross-check the simplex.

use super::transport::check_inputs;
use super::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

const MAX_CELLS: usize = 16;

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

/// Flow on each tree cell, obtained by repeatedly peeling leaves.
fn tree_flows(m: usize, n: usize, cells: &[(usize, usize)], supply: &[f64], demand: &[f64]) -> Vec<f64> {
    let mut residual: Vec<f64> = supply.iter().chain(demand).copied().collect();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); m + n];
    for (e, &(i, j)) in cells.iter().enumerate() {
        incident[i].push(e);
        incident[m + j].push(e);
    }
    let mut degree: Vec<usize> = incident.iter().map(Vec::len).collect();
    let mut done = vec![false; cells.len()];
    let mut flow = vec![0.0; cells.len()];
    let mut stack: Vec<usize> = (0..m + n).filter(|&a| degree[a] == 1).collect();
    while let Some(a) = stack.pop() {
        let Some(&e) = incident[a].iter().find(|&&e| !done[e]) else {
            continue;
        };
        done[e] = true;
        let (i, j) = cells[e];
        let other = if a == i { m + j } else { i };
        flow[e] = residual[a];
        residual[other] -= residual[a];
        residual[a] = 0.0;
        degree[a] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            stack.push(other);
        }
    }
    flow
}

/// Minimum transport cost found by enumerating every spanning-tree basis
/// of the transportation polytope. Limited to `|mu|·|nu| ≤ 16`.
pub fn ot_oracle(mu: &DiscreteDistribution, nu: &DiscreteDistribution, cost: &DenseMatrix<f64>) -> Result<f64> {
    check_inputs(mu, nu, cost)?;
    let (m, n) = (mu.len(), nu.len());
    if m * n > MAX_CELLS {
        return Err(Error::arg(format!("oracle limited to {MAX_CELLS} cells, got {m}x{n}")));
    }
    let size = m + n - 1;
    let all: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut best = f64::INFINITY;
    let mut pick = Vec::with_capacity(size);

    fn recurse(
        start: usize,
        size: usize,
        all: &[(usize, usize)],
        pick: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if pick.len() == size {
            visit(pick);
            return;
        }
        for c in start..all.len() {
            if all.len() - c < size - pick.len() {
                break;
            }
            pick.push(c);
            recurse(c + 1, size, all, pick, visit);
            pick.pop();
        }
    }

    let mut visit = |chosen: &[usize]| {
        let mut parent: Vec<usize> = (0..m + n).collect();
        for &c in chosen {
            let (i, j) = all[c];
            let (a, b) = (find(&mut parent, i), find(&mut parent, m + j));
            if a == b {
                return;
            }
            parent[a] = b;
        }
        let cells: Vec<(usize, usize)> = chosen.iter().map(|&c| all[c]).collect();
        let flow = tree_flows(m, n, &cells, &mu.mass, &nu.mass);
        if flow.iter().any(|&x| x < -1e-12) {
            return;
        }
        let total: f64 = cells.iter().zip(&flow).map(|(&(i, j), &x)| cost[(i, j)] * x).sum();
        best = best.min(total);
    };
    recurse(0, size, &all, &mut pick, &mut visit);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::super::wasserstein;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_by_two_closed_form() {
        let mu = DiscreteDistribution::new(vec![0], vec![1.0]).unwrap();
        let nu = DiscreteDistribution::new(vec![1, 2], vec![0.3, 0.7]).unwrap();
        let c = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!((ot_oracle(&mu, &nu, &c).unwrap() - (0.3 + 1.4)).abs() < 1e-15);
    }

    #[test]
    fn identical_is_zero() {
        let mu = DiscreteDistribution::new(vec![0, 1, 2], vec![0.2, 0.3, 0.5]).unwrap();
        let c = DenseMatrix::from_fn(3, 3, |a, b| if a == b { 0.0 } else { 1.0 });
        assert!(ot_oracle(&mu, &mu, &c).unwrap().abs() < 1e-15);
    }

    #[test]
    fn oversized_rejected() {
        let mu = DiscreteDistribution::new((0..5).collect(), vec![0.2; 5]).unwrap();
        let c = DenseMatrix::zeros(5, 5);
        assert!(matches!(ot_oracle(&mu, &mu, &c), Err(Error::Argument(_))));
    }

    fn masses(len: usize) -> impl Strategy<Value = Vec<f64>> {
        // a sprinkling of exact zeros exercises degenerate bases
        proptest::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], len).prop_map(|mut v| {
            if v.iter().all(|&x| x == 0.0) {
                v[0] = 1.0;
            }
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            v
        })
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..=4, 1usize..=4).prop_flat_map(|(m, n)| {
            (
                masses(m),
                masses(n),
                proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), Just(2.0), 0.0f64..5.0], m * n),
            )
        })
    }

    fn build(a: &[f64], b: &[f64], c: &[f64]) -> (DiscreteDistribution, DiscreteDistribution, DenseMatrix<f64>) {
        let mu = DiscreteDistribution::new((0..a.len()).collect(), a.to_vec()).unwrap();
        let nu = DiscreteDistribution::new((0..b.len()).collect(), b.to_vec()).unwrap();
        (mu, nu, DenseMatrix::new(a.len(), b.len(), c.to_vec()).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn simplex_matches_enumeration((a, b, c) in instance()) {
            let (mu, nu, cost) = build(&a, &b, &c);
            let exact = ot_oracle(&mu, &nu, &cost).unwrap();
            let w = wasserstein(&mu, &nu, &cost).unwrap();
            prop_assert!((exact - w).abs() < 1e-9, "oracle {} simplex {}", exact, w);
        }

        #[test]
        fn cost_scaling((a, b, c) in instance()) {
            let (mu, nu, cost) = build(&a, &b, &c);
            let w = wasserstein(&mu, &nu, &cost).unwrap();
            for k in [0.0, 0.5, 2.0] {
                let scaled = wasserstein(&mu, &nu, &cost.scale(k)).unwrap();
                prop_assert!((scaled - k * w).abs() < 1e-9);
            }
        }
    }
}
