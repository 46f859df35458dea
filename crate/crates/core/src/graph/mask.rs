use super::Graph;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

fn check_targets(n: usize, targets: &[usize]) -> Result<()> {
    match targets.iter().find(|&&t| t >= n) {
        Some(&id) => Err(Error::Index { id, n }),
        None => Ok(()),
    }
}

/// Copy of the attribute matrix where each target row is replaced by the
/// mean of its neighbors' original rows (the global column mean for an
/// isolated target).
pub fn mask_attributes<T: Scalar>(g: &Graph<T>, targets: &[usize]) -> Result<DenseMatrix<T>> {
    check_targets(g.n(), targets)?;
    let x = g.attributes();
    let mut out = x.clone();
    let global = x.col_means();
    for &t in targets {
        let ns = g.neighbors(t);
        let row = out.row_mut(t);
        if ns.is_empty() {
            row.copy_from_slice(global.row(0));
            continue;
        }
        row.fill(T::zero());
        for &j in ns {
            for (o, &v) in row.iter_mut().zip(x.row(j)) {
                *o += v;
            }
        }
        let inv = T::one() / T::from_usize_lossy(ns.len());
        row.iter_mut().for_each(|v| *v *= inv);
    }
    Ok(out)
}

/// Removes every edge incident to a target node.
pub fn mask_edges<T: Scalar>(g: &Graph<T>, targets: &[usize]) -> Result<Graph<T>> {
    check_targets(g.n(), targets)?;
    let mut masked = vec![false; g.n()];
    for &t in targets {
        masked[t] = true;
    }
    let edges = g
        .adjacency()
        .edges()
        .filter(|&(i, j)| !masked[i] && !masked[j]);
    let adjacency = super::Adjacency::from_edges(g.n(), edges)?;
    Graph::new(
        adjacency,
        g.attributes().clone(),
        g.labels().map(<[_]>::to_vec),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    #[test]
    fn attribute_masking() {
        let g = Graph::from_edges([(0, 1)], M::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap()).unwrap();
        let m = mask_attributes(&g, &[0]).unwrap();
        assert_eq!(m.row(0), &[3.0, 4.0]);
        assert_eq!(mask_attributes(&g, &[]).unwrap(), *g.attributes());

        let tri = Graph::from_edges([(0, 1), (1, 2), (0, 2)], M::from_rows(&[[1.0], [2.0], [3.0]]).unwrap()).unwrap();
        assert_eq!(mask_attributes(&tri, &[0]).unwrap().row(0), &[2.5]);
    }

    #[test]
    fn isolated_target_gets_global_mean() {
        let g = Graph::from_edges([(0, 1)], M::from_rows(&[[1.0], [2.0], [6.0]]).unwrap()).unwrap();
        assert_eq!(mask_attributes(&g, &[2]).unwrap().row(2), &[3.0]);
    }

    #[test]
    fn edge_masking() {
        let g = Graph::from_edges([(0, 1)], M::zeros(2, 1)).unwrap();
        assert_eq!(mask_edges(&g, &[0]).unwrap().num_edges(), 0);
        assert_eq!(mask_edges(&g, &[]).unwrap(), g);

        let star = Graph::from_edges((1..6).map(|i| (0, i)), M::zeros(6, 1)).unwrap();
        let removed = star.num_edges() - mask_edges(&star, &[0]).unwrap().num_edges();
        assert_eq!(removed, star.degree(0));
    }

    #[test]
    fn out_of_range_target() {
        let g = Graph::from_edges([(0, 1)], M::zeros(2, 1)).unwrap();
        assert!(mask_edges(&g, &[2]).is_err());
    }
}
