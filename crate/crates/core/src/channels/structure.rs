//! Link-enhanced structure estimation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_ratio, row_errors, sample_targets, score_batches, Channel, ChannelKind, EmbeddingObjective, GraphData, StepLoss};
use crate::error::{Error, Result};
use crate::graph::{diffuse, diffuse_enhanced, knn_graph, mask_edges, normalize_adjacency, normalize_pattern, AdjKind};
use crate::linalg::DenseMatrix;
use crate::nn::{glorot_uniform, relu, sigmoid, Activation, Param, Parameterized};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructConfig {
    pub hidden: usize,
    /// Diffusion restart probability `β`.
    pub beta: f64,
    /// Diffusion iterations `T`.
    pub iterations: usize,
    /// Neighbors per node in the enhanced graph.
    pub k: usize,
    /// Weight of the consistency loss.
    pub gamma: f64,
    pub mask_ratio: f64,
    /// Diffuse the enhanced graph with its own iterates (otherwise with the
    /// masked-graph iterates).
    pub own_iterates: bool,
    /// Weight on the positive (edge) entries of the adjacency loss.
    pub pos_weight: f64,
    pub score_batch: usize,
    /// Activation applied after the combiner `Wd`.
    pub decoder_activation: Activation,
}

impl Default for StructConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            beta: 0.2,
            iterations: 4,
            k: 10,
            gamma: 1.0,
            mask_ratio: 0.1,
            own_iterates: true,
            pos_weight: 1.0,
            score_batch: 64,
            decoder_activation: Activation::Identity,
        }
    }
}

impl StructConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.iterations == 0 || self.k == 0 || self.score_batch == 0 {
            return Err(Error::Config("struct hidden, iterations, k and score_batch must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("struct beta {} outside [0, 1]", self.beta)));
        }
        if matches!(self.decoder_activation, Activation::Sigmoid | Activation::Tanh) {
            return Err(Error::Config("struct decoder activation must be identity or relu".into()));
        }
        if !(self.gamma >= 0.0) || !(self.pos_weight > 0.0) {
            return Err(Error::Config("gamma must be >= 0 and pos_weight > 0".into()));
        }
        check_ratio(self.mask_ratio)
    }
}

#[derive(Clone, Debug)]
pub struct StructModel<T> {
    pub config: StructConfig,
    /// `d × h`
    pub w3: Param<T>,
    /// `h × h`
    pub w4: Param<T>,
    /// `2h × h`
    pub wd: Param<T>,
    /// `1 × 1` logit offset of the decoder
    pub bd: Param<T>,
}

/// Diffused features of the masked graph (`X̄`) and of its kNN enhancement (`X̄′`).
#[derive(Clone, Debug)]
pub struct StructInputs<T> {
    pub targets: Vec<usize>,
    pub xbar: DenseMatrix<T>,
    pub xbar_enh: DenseMatrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructForwardOut<T> {
    pub h1: DenseMatrix<T>,
    pub h1_enh: DenseMatrix<T>,
    pub h2: DenseMatrix<T>,
    pub h2_enh: DenseMatrix<T>,
    /// `σ([H2 | H2′]·Wd)` with the configured decoder activation
    pub p: DenseMatrix<T>,
    pub ahat: DenseMatrix<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructLosses<T> {
    pub adj: T,
    pub cons: T,
    pub total: T,
}

impl<T: Scalar> StructModel<T> {
    pub fn new(num_features: usize, config: StructConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if num_features == 0 {
            return Err(Error::Config("graph has no attributes".into()));
        }
        let h = config.hidden;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            w3: glorot_uniform(num_features, h, &mut rng),
            w4: glorot_uniform(h, h, &mut rng),
            wd: glorot_uniform(2 * h, h, &mut rng),
            bd: Param::new(DenseMatrix::zeros(1, 1)),
            config,
        })
    }

    pub fn num_features(&self) -> usize {
        self.w3.value.rows()
    }

    /// Masks the edges of `targets`, diffuses, builds the kNN graph and
    /// diffuses over it.
    pub fn prepare(&self, data: &GraphData<T>, targets: &[usize]) -> Result<StructInputs<T>> {
        let c = &self.config;
        let beta = T::lit(c.beta);
        let masked = mask_edges(&data.graph, targets)?;
        let norm = normalize_adjacency(&masked);
        let x = data.graph.attributes();
        let xbar = diffuse(&norm, x, beta, c.iterations)?;
        let k = c.k.min(data.n().saturating_sub(1)).max(1);
        let enhanced = knn_graph(&xbar, k)?;
        let enh_norm = normalize_pattern(&enhanced, AdjKind::SelfLoopSym);
        let xbar_enh = diffuse_enhanced(&norm, &enh_norm, x, beta, c.iterations, c.own_iterates)?;
        Ok(StructInputs {
            targets: targets.to_vec(),
            xbar,
            xbar_enh,
        })
    }

    pub fn forward(&self, inputs: &StructInputs<T>) -> Result<StructForwardOut<T>> {
        let h1 = inputs.xbar.matmul(&self.w3.value)?;
        let h1_enh = inputs.xbar_enh.matmul(&self.w3.value)?;
        let h2 = relu(&h1).matmul(&self.w4.value)?;
        let h2_enh = relu(&h1_enh).matmul(&self.w4.value)?;
        let p = self.config.decoder_activation.apply(&h2.hcat(&h2_enh)?.matmul(&self.wd.value)?);
        let bias = self.bd.value[(0, 0)];
        let ahat = sigmoid(&p.matmul_nt(&p)?.map(|v| v + bias));
        Ok(StructForwardOut {
            h1,
            h1_enh,
            h2,
            h2_enh,
            p,
            ahat,
        })
    }

    /// `L_adj`, `L_cons` and `L_str = L_adj + γ·L_cons`, together with the
    /// gradients with respect to `Â` and `H1` (the `H1′` gradient is its negation).
    pub fn losses(
        &self,
        out: &StructForwardOut<T>,
        a_real: &DenseMatrix<T>,
    ) -> Result<(StructLosses<T>, DenseMatrix<T>, DenseMatrix<T>)> {
        let pos_weight = T::lit(self.config.pos_weight);
        let gamma = T::lit(self.config.gamma);
        let two = T::lit(2.0);
        if out.ahat.shape() != a_real.shape() {
            return Err(Error::shape("struct_losses", out.ahat.shape(), a_real.shape()));
        }
        let mut adj = T::zero();
        let g_ahat = out.ahat.zip_map(a_real, "struct_losses", |p, a| {
            let w = if a > T::zero() { pos_weight } else { T::one() };
            let d = p - a;
            two * w * d
        })?;
        for (&p, &a) in out.ahat.data().iter().zip(a_real.data()) {
            let w = if a > T::zero() { pos_weight } else { T::one() };
            adj += w * (p - a) * (p - a);
        }
        let diff = out.h1.sub(&out.h1_enh)?;
        let cons = diff.frobenius_sq();
        let total = adj + gamma * cons;
        if !total.is_finite() {
            return Err(Error::Value("non-finite structure loss".into()));
        }
        Ok((StructLosses { adj, cons, total }, g_ahat, diff.scale(two * gamma)))
    }

    /// Accumulates gradients given `∂L/∂Â`, `∂L/∂H1` and optionally `∂L/∂H2`.
    pub fn backward(
        &mut self,
        inputs: &StructInputs<T>,
        out: &StructForwardOut<T>,
        grad_ahat: &DenseMatrix<T>,
        grad_h1: &DenseMatrix<T>,
        grad_h2_extra: Option<&DenseMatrix<T>>,
    ) -> Result<()> {
        let h = self.config.hidden;
        let g_s = Activation::Sigmoid.backward(&out.ahat, grad_ahat)?;
        self.bd.accumulate(&DenseMatrix::filled(1, 1, g_s.sum()))?;
        let g_p = g_s.add(&g_s.transpose())?.matmul(&out.p)?;
        let g_q = self.config.decoder_activation.backward(&out.p, &g_p)?;
        let hcat = out.h2.hcat(&out.h2_enh)?;
        self.wd.accumulate(&hcat.matmul_tn(&g_q)?)?;
        let (mut g_h2, g_h2_enh) = g_q.matmul_nt(&self.wd.value)?.split_cols(h)?;
        if let Some(extra) = grad_h2_extra {
            g_h2.add_assign(extra)?;
        }

        let r1 = relu(&out.h1);
        let r1_enh = relu(&out.h1_enh);
        let mut g_w4 = r1.matmul_tn(&g_h2)?;
        g_w4.add_assign(&r1_enh.matmul_tn(&g_h2_enh)?)?;
        self.w4.accumulate(&g_w4)?;

        let mut g_h1 = Activation::Relu.backward(&r1, &g_h2.matmul_nt(&self.w4.value)?)?;
        g_h1.add_assign(grad_h1)?;
        let mut g_h1_enh = Activation::Relu.backward(&r1_enh, &g_h2_enh.matmul_nt(&self.w4.value)?)?;
        g_h1_enh.scaled_add_assign(-T::one(), grad_h1)?;
        let mut g_w3 = inputs.xbar.matmul_tn(&g_h1)?;
        g_w3.add_assign(&inputs.xbar_enh.matmul_tn(&g_h1_enh)?)?;
        self.w3.accumulate(&g_w3)
    }
}

impl<T: Scalar> Parameterized<T> for StructModel<T> {
    fn params(&self) -> Vec<(String, &Param<T>)> {
        vec![
            ("struct.w3".into(), &self.w3),
            ("struct.w4".into(), &self.w4),
            ("struct.wd".into(), &self.wd),
            ("struct.bd".into(), &self.bd),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        vec![
            ("struct.w3".into(), &mut self.w3),
            ("struct.w4".into(), &mut self.w4),
            ("struct.wd".into(), &mut self.wd),
            ("struct.bd".into(), &mut self.bd),
        ]
    }
}

impl<T: Scalar> Channel<T> for StructModel<T> {
    fn kind(&self) -> ChannelKind {
        ChannelKind::Struct
    }

    fn embedding_dim(&self) -> usize {
        self.config.hidden
    }

    fn embed(&self, data: &GraphData<T>) -> Result<DenseMatrix<T>> {
        Ok(self.forward(&self.prepare(data, &[])?)?.h2)
    }

    fn accumulate_step(
        &mut self,
        data: &GraphData<T>,
        rng: &mut ChaCha8Rng,
        recon_weight: T,
        extra: Option<&EmbeddingObjective<'_, T>>,
    ) -> Result<StepLoss> {
        let targets = sample_targets(data.n(), self.config.mask_ratio, rng);
        let inputs = self.prepare(data, &targets)?;
        let out = self.forward(&inputs)?;
        let (losses, g_ahat, g_h1) = self.losses(&out, &data.adjacency)?;
        let (distill, g_h2) = match extra {
            Some(f) => {
                let (l, g) = f(&out.h2)?;
                (l, Some(g))
            }
            None => (T::zero(), None),
        };
        self.backward(
            &inputs,
            &out,
            &g_ahat.scale(recon_weight),
            &g_h1.scale(recon_weight),
            g_h2.as_ref(),
        )?;
        Ok(StepLoss {
            recon: losses.total.as_f64(),
            distill: distill.as_f64(),
            total: 0.0,
        })
    }

    fn score(&self, data: &GraphData<T>) -> Result<Vec<T>> {
        let mut scores = vec![T::zero(); data.n()];
        for batch in score_batches(data.n(), self.config.score_batch) {
            let out = self.forward(&self.prepare(data, &batch)?)?;
            row_errors(&out.ahat, &data.adjacency, &batch, &mut scores);
        }
        Ok(scores)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "channel": "struct", "num_features": self.num_features(), "config": self.config })
    }
}
