//! The three reconstruction channels and the interface the trainer drives.

mod attr;
mod mix;
mod structure;

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use attr::{AttrCache, AttrConfig, AttrForwardOut, AttrModel};
pub use mix::{mix_operator, MixConfig, MixForwardOut, MixModel};
pub use structure::{StructConfig, StructForwardOut, StructInputs, StructLosses, StructModel};

use crate::curvature::{mixed_curvature_table, CurvatureTable};
use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, Graph, NormalizedAdj};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::nn::Parameterized;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Attr,
    Struct,
    Mix,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Attr => "attr",
            ChannelKind::Struct => "struct",
            ChannelKind::Mix => "mix",
        }
    }
}

/// Everything derived from the input graph once and shared by all channels.
#[derive(Clone, Debug)]
pub struct GraphData<T> {
    pub graph: Graph<T>,
    pub norm: NormalizedAdj<T>,
    /// Dense `A` of the unmasked graph.
    pub adjacency: DenseMatrix<T>,
    pub curvature: CurvatureTable,
    /// `D_c^(-1/2)·C·D_c^(-1/2)`
    pub mix_operator: SparseMatrix<T>,
    /// Dense `C`.
    pub c_dense: DenseMatrix<T>,
}

impl<T: Scalar> GraphData<T> {
    pub fn new(graph: Graph<T>, delta: f64) -> Result<Self> {
        let curvature = mixed_curvature_table(&graph, delta)?;
        Ok(Self::with_curvature(graph, curvature))
    }

    pub fn with_curvature(graph: Graph<T>, curvature: CurvatureTable) -> Self {
        let norm = normalize_adjacency(&graph);
        let adjacency = graph.adjacency().to_dense();
        let mix_operator = mix_operator(&curvature.c);
        let c_dense = curvature.c_dense();
        Self {
            graph,
            norm,
            adjacency,
            curvature,
            mix_operator,
            c_dense,
        }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

/// Extra objective on a channel's embedding, returning its value and the
/// gradient with respect to the embedding (already weighted).
pub type EmbeddingObjective<'a, T> = dyn Fn(&DenseMatrix<T>) -> Result<(T, DenseMatrix<T>)> + 'a;

/// Loss values from one training step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepLoss {
    pub recon: f64,
    pub distill: f64,
    pub total: f64,
}

pub trait Channel<T: Scalar>: Parameterized<T> + Send + Sync {
    fn kind(&self) -> ChannelKind;

    fn embedding_dim(&self) -> usize;

    /// Embedding of every node on the unmasked graph (`Z`, `H2` or `Hc`).
    fn embed(&self, data: &GraphData<T>) -> Result<DenseMatrix<T>>;

    /// Draws this step's mask from `rng`, evaluates
    /// `recon_weight·L_recon + extra(embedding)` and accumulates gradients.
    fn accumulate_step(
        &mut self,
        data: &GraphData<T>,
        rng: &mut ChaCha8Rng,
        recon_weight: T,
        extra: Option<&EmbeddingObjective<'_, T>>,
    ) -> Result<StepLoss>;

    /// Per-node anomaly score, nonnegative.
    fn score(&self, data: &GraphData<T>) -> Result<Vec<T>>;

    /// Meta information stored next to checkpointed weights.
    fn describe(&self) -> serde_json::Value;
}

/// `⌈ratio·n⌉` distinct random nodes (at least one), sorted.
pub(crate) fn sample_targets(n: usize, ratio: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let count = ((ratio * n as f64).ceil() as usize).clamp(1, n);
    let mut t = index::sample(rng, n, count).into_vec();
    t.sort_unstable();
    t
}

/// Strided partition of `0..n` into batches of at most `batch` nodes.
pub(crate) fn score_batches(n: usize, batch: usize) -> Vec<Vec<usize>> {
    let batch = batch.max(1);
    let count = n.div_ceil(batch).max(1);
    (0..count)
        .map(|b| (b..n).step_by(count).collect())
        .filter(|v: &Vec<usize>| !v.is_empty())
        .collect()
}

pub(crate) fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Config(format!("mask ratio {ratio} outside (0, 1]")));
    }
    Ok(())
}

/// Squared error of each row in `rows`, written to `out[row]`.
pub(crate) fn row_errors<T: Scalar>(
    pred: &DenseMatrix<T>,
    target: &DenseMatrix<T>,
    rows: &[usize],
    out: &mut [T],
) {
    for &i in rows {
        out[i] = pred
            .row(i)
            .iter()
            .zip(target.row(i))
            .map(|(&p, &t)| (p - t) * (p - t))
            .sum();
    }
}
