//! Planted two-community benchmark graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Adjacency, Graph, Label};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoCommunityConfig {
    pub n: usize,
    pub d: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Distance scale between the two community mean vectors.
    pub separation: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for TwoCommunityConfig {
    fn default() -> Self {
        Self {
            n: 500,
            d: 16,
            p_in: 0.05,
            p_out: 0.005,
            separation: 1.0,
            noise: 0.5,
            seed: 0,
        }
    }
}

/// Stochastic block model with two equal halves; attributes are Gaussian
/// around a per-community mean. Every node is labeled normal.
pub fn two_community<T: Scalar>(cfg: &TwoCommunityConfig) -> Result<Graph<T>> {
    if cfg.n < 2 || cfg.d == 0 {
        return Err(Error::arg("two_community needs n >= 2 and d >= 1"));
    }
    for p in [cfg.p_in, cfg.p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::arg(format!("edge probability {p} outside [0, 1]")));
        }
    }
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::arg(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = cfg.n / 2;
    let community = |i: usize| usize::from(i >= half);

    let means: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..cfg.d).map(|_| cfg.separation * rng.random_range(-1.0..1.0)).collect())
        .collect();

    let mut edges = Vec::new();
    for i in 0..cfg.n {
        for j in i + 1..cfg.n {
            let p = if community(i) == community(j) { cfg.p_in } else { cfg.p_out };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let x = DenseMatrix::from_fn(cfg.n, cfg.d, |i, k| {
        T::lit(means[community(i)][k] + noise.sample(&mut rng))
    });
    let adjacency = Adjacency::from_edges(cfg.n, edges)?;
    Graph::new(adjacency, x, Some(vec![Label::Normal; cfg.n]))
}
