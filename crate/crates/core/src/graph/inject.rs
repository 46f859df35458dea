//! Synthetic anomaly injection: dense cliques for structural anomalies and
//! far-away attribute copies for attribute anomalies.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, Label};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct InjectionConfig {
    pub clique_count: usize,
    pub clique_size: usize,
    pub attr_anom_count: usize,
    pub candidate_pool: usize,
    pub mixed_count: usize,
    pub seed: u64,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self {
            clique_count: 0,
            clique_size: 15,
            attr_anom_count: 0,
            candidate_pool: 50,
            mixed_count: 0,
            seed: 0,
        }
    }
}

impl InjectionConfig {
    pub fn total_anomalies(&self) -> usize {
        self.clique_count * self.clique_size + self.attr_anom_count + self.mixed_count
    }

    fn validate(&self) -> Result<()> {
        if self.clique_size < 2 {
            return Err(Error::arg("clique_size must be at least 2"));
        }
        if self.candidate_pool < 1 {
            return Err(Error::arg("candidate_pool must be at least 1"));
        }
        Ok(())
    }
}

/// Copies the row among `pool` random candidates that lies farthest (in
/// Euclidean distance) from row `i` of `original`.
fn farthest_candidate<T: Scalar, R: Rng>(
    original: &DenseMatrix<T>,
    i: usize,
    pool: usize,
    rng: &mut R,
) -> usize {
    let n = original.rows();
    let picks = index::sample(rng, n - 1, pool.min(n - 1));
    let xi = original.row(i);
    let mut best = (T::neg_infinity(), usize::MAX);
    for p in picks.iter() {
        let j = if p >= i { p + 1 } else { p };
        let d: T = original
            .row(j)
            .iter()
            .zip(xi)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        if d > best.0 || (d == best.0 && j < best.1) {
            best = (d, j);
        }
    }
    best.1
}

/// Injects structural, attribute and mixed anomalies. Only currently
/// normal (or unlabeled) nodes are eligible; the result is labeled.
///
/// Mixed anomalies are grouped into cliques of up to `clique_size` members
/// (a trailing singleton joins the previous group; a lone mixed node is
/// wired to `clique_size − 1` random normal nodes) and then receive an
/// attribute replacement.
pub fn inject_anomalies<T: Scalar>(g: &Graph<T>, cfg: &InjectionConfig) -> Result<Graph<T>> {
    cfg.validate()?;
    let n = g.n();
    let mut labels = g
        .labels()
        .map(<[_]>::to_vec)
        .unwrap_or_else(|| vec![Label::Normal; n]);
    let mut eligible: Vec<usize> = (0..n).filter(|&i| labels[i] == Label::Normal).collect();
    let needed = cfg.total_anomalies();
    if needed > eligible.len() {
        return Err(Error::arg(format!(
            "{needed} anomalies requested but only {} unlabeled nodes",
            eligible.len()
        )));
    }
    if n < 2 && (cfg.attr_anom_count + cfg.mixed_count) > 0 {
        return Err(Error::arg("attribute injection needs at least two nodes"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    eligible.shuffle(&mut rng);
    let (adjacency, attributes, _) = g.clone().into_parts();
    let mut adjacency = adjacency;
    let original = attributes.clone();
    let mut attributes = attributes;

    let mut cursor = 0;
    let mut take = |count: usize| {
        let s = &eligible[cursor..cursor + count];
        cursor += count;
        s.to_vec()
    };

    for _ in 0..cfg.clique_count {
        let members = take(cfg.clique_size);
        connect_all(&mut adjacency, &members);
        for &m in &members {
            labels[m] = Label::StructAnom;
        }
    }

    for i in take(cfg.attr_anom_count) {
        let src = farthest_candidate(&original, i, cfg.candidate_pool, &mut rng);
        attributes.row_mut(i).copy_from_slice(original.row(src));
        labels[i] = Label::AttrAnom;
    }

    let mixed = take(cfg.mixed_count);
    let mut groups: Vec<Vec<usize>> = mixed.chunks(cfg.clique_size).map(<[_]>::to_vec).collect();
    if groups.len() > 1 && groups.last().is_some_and(|g| g.len() == 1) {
        let lone = groups.pop().expect("nonempty");
        groups.last_mut().expect("nonempty").extend(lone);
    }
    for group in &groups {
        if group.len() == 1 {
            let i = group[0];
            let others: Vec<usize> = (0..n)
                .filter(|&j| j != i && labels[j] == Label::Normal)
                .collect();
            let k = (cfg.clique_size - 1).min(others.len());
            for p in index::sample(&mut rng, others.len(), k).iter() {
                adjacency.add_edge(i, others[p]);
            }
        } else {
            connect_all(&mut adjacency, group);
        }
        for &i in group {
            let src = farthest_candidate(&original, i, cfg.candidate_pool, &mut rng);
            attributes.row_mut(i).copy_from_slice(original.row(src));
            labels[i] = Label::MixedAnom;
        }
    }

    Graph::new(adjacency, attributes, Some(labels))
}

fn connect_all(adj: &mut super::Adjacency, members: &[usize]) {
    for (a, &u) in members.iter().enumerate() {
        for &v in &members[a + 1..] {
            adj.add_edge(u, v);
        }
    }
}
