//! Curvature-based mixture estimation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Channel, ChannelKind, EmbeddingObjective, GraphData, StepLoss};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::nn::{frobenius_loss, gcn_backward, gcn_forward, glorot_uniform, sigmoid, Activation, GcnCache, Param, Parameterized};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixConfig {
    pub hidden: usize,
    /// Number of GCN layers.
    pub layers: usize,
    /// Self-mass `δ` of the attribute-mixed distributions.
    pub delta: f64,
}

impl Default for MixConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            layers: 2,
            delta: 0.5,
        }
    }
}

impl MixConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.layers == 0 {
            return Err(Error::Config("mix hidden and layers must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::Config(format!("mix delta {} outside [0, 1)", self.delta)));
        }
        Ok(())
    }
}

/// `D_c^(-1/2)·C·D_c^(-1/2)` with `D_c` the row sums of `C`.
pub fn mix_operator<T: Scalar>(c: &SparseMatrix<f64>) -> SparseMatrix<T> {
    let inv: Vec<f64> = c
        .row_sums()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut triplets = Vec::with_capacity(c.nnz());
    for i in 0..c.rows() {
        let (idx, vals) = c.row(i);
        for (&j, &v) in idx.iter().zip(vals) {
            triplets.push((i, j, T::lit(inv[i] * v * inv[j])));
        }
    }
    SparseMatrix::from_triplets(c.rows(), c.cols(), triplets).expect("indices come from a valid matrix")
}

#[derive(Clone, Debug)]
pub struct MixModel<T> {
    pub config: MixConfig,
    /// GCN weights, `d × h` then `h × h`.
    pub weights: Vec<Param<T>>,
    /// Decoder scale, `1 × 1`.
    pub a: Param<T>,
    /// Decoder offset, `1 × 1`.
    pub b: Param<T>,
}

#[derive(Clone, Debug)]
pub struct MixForwardOut<T> {
    pub hc: DenseMatrix<T>,
    /// `Hc·Hcᵀ`
    pub gram: DenseMatrix<T>,
    pub chat: DenseMatrix<T>,
    pub caches: Vec<GcnCache<T>>,
}

impl<T: Scalar> MixModel<T> {
    pub fn new(num_features: usize, config: MixConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if num_features == 0 {
            return Err(Error::Config("graph has no attributes".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..config.layers)
            .map(|l| {
                let rows = if l == 0 { num_features } else { config.hidden };
                glorot_uniform(rows, config.hidden, &mut rng)
            })
            .collect();
        Ok(Self {
            weights,
            a: Param::new(DenseMatrix::filled(1, 1, T::one())),
            b: Param::new(DenseMatrix::zeros(1, 1)),
            config,
        })
    }

    pub fn num_features(&self) -> usize {
        self.weights[0].value.rows()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.weights.len() {
            Activation::Identity
        } else {
            Activation::Relu
        }
    }

    pub fn forward(&self, op: &SparseMatrix<T>, x: &DenseMatrix<T>) -> Result<MixForwardOut<T>> {
        let mut h = x.clone();
        let mut caches = Vec::with_capacity(self.weights.len());
        for (l, w) in self.weights.iter().enumerate() {
            let (out, cache) = gcn_forward(op, &h, w, self.activation(l))?;
            caches.push(cache);
            h = out;
        }
        let gram = h.matmul_nt(&h)?;
        let (a, b) = (self.a.value[(0, 0)], self.b.value[(0, 0)]);
        let chat = sigmoid(&gram.map(|g| a * g + b));
        Ok(MixForwardOut {
            hc: h,
            gram,
            chat,
            caches,
        })
    }

    pub fn backward(
        &mut self,
        op: &SparseMatrix<T>,
        out: &MixForwardOut<T>,
        grad_chat: &DenseMatrix<T>,
        grad_hc_extra: Option<&DenseMatrix<T>>,
    ) -> Result<()> {
        let g_pre = Activation::Sigmoid.backward(&out.chat, grad_chat)?;
        let a = self.a.value[(0, 0)];
        let g_a = g_pre.hadamard(&out.gram)?.sum();
        self.a.accumulate(&DenseMatrix::filled(1, 1, g_a))?;
        self.b.accumulate(&DenseMatrix::filled(1, 1, g_pre.sum()))?;
        let g_gram = g_pre.scale(a);
        let mut g_h = g_gram.add(&g_gram.transpose())?.matmul(&out.hc)?;
        if let Some(extra) = grad_hc_extra {
            g_h.add_assign(extra)?;
        }
        for l in (0..self.weights.len()).rev() {
            let act = self.activation(l);
            g_h = gcn_backward(op, &out.caches[l], &mut self.weights[l], act, &g_h)?;
        }
        Ok(())
    }
}

/// `‖C − Ĉ‖²_F` and its gradient with respect to `Ĉ`.
pub fn mix_loss<T: Scalar>(chat: &DenseMatrix<T>, c: &DenseMatrix<T>) -> Result<(T, DenseMatrix<T>)> {
    frobenius_loss(chat, c)
}

/// `(mean_j C_ij − mean_j Ĉ_ij)²` over the edges incident to each node.
pub fn mix_node_scores<T: Scalar>(data: &GraphData<T>, chat: &DenseMatrix<T>) -> Vec<T> {
    (0..data.n())
        .map(|i| {
            let ns = data.graph.neighbors(i);
            if ns.is_empty() {
                return T::zero();
            }
            let k = T::from_usize_lossy(ns.len());
            let c: T = ns.iter().map(|&j| data.c_dense[(i, j)]).sum::<T>() / k;
            let ch: T = ns.iter().map(|&j| chat[(i, j)]).sum::<T>() / k;
            (c - ch) * (c - ch)
        })
        .collect()
}

impl<T: Scalar> Parameterized<T> for MixModel<T> {
    fn params(&self) -> Vec<(String, &Param<T>)> {
        let mut v: Vec<(String, &Param<T>)> = self
            .weights
            .iter()
            .enumerate()
            .map(|(l, w)| (format!("mix.w{l}"), w))
            .collect();
        v.push(("mix.a".into(), &self.a));
        v.push(("mix.b".into(), &self.b));
        v
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        let mut v: Vec<(String, &mut Param<T>)> = self
            .weights
            .iter_mut()
            .enumerate()
            .map(|(l, w)| (format!("mix.w{l}"), w))
            .collect();
        v.push(("mix.a".into(), &mut self.a));
        v.push(("mix.b".into(), &mut self.b));
        v
    }
}

impl<T: Scalar> Channel<T> for MixModel<T> {
    fn kind(&self) -> ChannelKind {
        ChannelKind::Mix
    }

    fn embedding_dim(&self) -> usize {
        self.config.hidden
    }

    fn embed(&self, data: &GraphData<T>) -> Result<DenseMatrix<T>> {
        Ok(self.forward(&data.mix_operator, data.graph.attributes())?.hc)
    }

    fn accumulate_step(
        &mut self,
        data: &GraphData<T>,
        _rng: &mut ChaCha8Rng,
        recon_weight: T,
        extra: Option<&EmbeddingObjective<'_, T>>,
    ) -> Result<StepLoss> {
        let out = self.forward(&data.mix_operator, data.graph.attributes())?;
        let (recon, grad) = mix_loss(&out.chat, &data.c_dense)?;
        let (distill, g_h) = match extra {
            Some(f) => {
                let (l, g) = f(&out.hc)?;
                (l, Some(g))
            }
            None => (T::zero(), None),
        };
        self.backward(&data.mix_operator, &out, &grad.scale(recon_weight), g_h.as_ref())?;
        Ok(StepLoss {
            recon: recon.as_f64(),
            distill: distill.as_f64(),
            total: 0.0,
        })
    }

    fn score(&self, data: &GraphData<T>) -> Result<Vec<T>> {
        let out = self.forward(&data.mix_operator, data.graph.attributes())?;
        Ok(mix_node_scores(data, &out.chat))
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "channel": "mix", "num_features": self.num_features(), "config": self.config })
    }
}
