//! Multi-scale attribute estimation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_ratio, row_errors, sample_targets, score_batches, Channel, ChannelKind, EmbeddingObjective, GraphData,
    StepLoss,
};
use crate::error::{Error, Result};
use crate::graph::{mask_attributes, propagate_multiscale, PropagationStack};
use crate::linalg::DenseMatrix;
use crate::nn::{glorot_uniform, masked_row_loss, relu, softmax_rows, softmax_rows_backward, Activation, Param, Parameterized};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttrConfig {
    /// Embedding width `h`.
    pub hidden: usize,
    /// Attention width `h′`.
    pub attn_hidden: usize,
    /// Number of propagation scales `L`.
    pub scales: usize,
    /// Restart probability `α`.
    pub alpha: f64,
    pub mask_ratio: f64,
    pub score_batch: usize,
}

impl Default for AttrConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            attn_hidden: 32,
            scales: 4,
            alpha: 0.2,
            mask_ratio: 0.1,
            score_batch: 64,
        }
    }
}

impl AttrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.attn_hidden == 0 || self.scales == 0 || self.score_batch == 0 {
            return Err(Error::Config("attr widths, scales and score_batch must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("attr alpha {} outside [0, 1]", self.alpha)));
        }
        check_ratio(self.mask_ratio)
    }
}

#[derive(Clone, Debug)]
pub struct AttrModel<T> {
    pub config: AttrConfig,
    /// Shared encoder, `d × h`.
    pub w1: Param<T>,
    /// Attention vector, `h′ × 1`.
    pub q: Param<T>,
    /// `h′ × h`
    pub wz: Param<T>,
    /// `h′ × d`
    pub wx: Param<T>,
    /// Decoder, `h × d`.
    pub w2: Param<T>,
    /// `1 × d`
    pub b: Param<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttrForwardOut<T> {
    pub z: DenseMatrix<T>,
    pub xhat: DenseMatrix<T>,
    /// `n × L` attention weights over scales.
    pub attn: DenseMatrix<T>,
}

/// Intermediate values needed by the backward pass.
#[derive(Clone, Debug)]
pub struct AttrCache<T> {
    /// `Z^(l) = relu(X̄^(l)·W1)`
    pub z_views: Vec<DenseMatrix<T>>,
    /// `tanh(Z^(l)·WZᵀ + X·WXᵀ)`
    pub t_views: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> AttrModel<T> {
    pub fn new(num_features: usize, config: AttrConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let (d, h, ha) = (num_features, config.hidden, config.attn_hidden);
        if d == 0 {
            return Err(Error::Config("graph has no attributes".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            w1: glorot_uniform(d, h, &mut rng),
            q: glorot_uniform(ha, 1, &mut rng),
            wz: glorot_uniform(ha, h, &mut rng),
            wx: glorot_uniform(ha, d, &mut rng),
            w2: glorot_uniform(h, d, &mut rng),
            b: Param::new(DenseMatrix::zeros(1, d)),
            config,
        })
    }

    pub fn num_features(&self) -> usize {
        self.w1.value.rows()
    }

    /// Masked attribute matrix and its propagation stack for `targets`.
    pub fn masked_inputs(
        &self,
        data: &GraphData<T>,
        targets: &[usize],
    ) -> Result<(PropagationStack<T>, DenseMatrix<T>)> {
        let xm = mask_attributes(&data.graph, targets)?;
        let stack = propagate_multiscale(&data.norm, &xm, T::lit(self.config.alpha), self.config.scales)?;
        Ok((stack, xm))
    }

    pub fn forward(
        &self,
        stack: &PropagationStack<T>,
        xm: &DenseMatrix<T>,
    ) -> Result<(AttrForwardOut<T>, AttrCache<T>)> {
        if stack.scales != self.config.scales || stack.views.len() != self.config.scales {
            return Err(Error::arg(format!(
                "stack has {} scales, model expects {}",
                stack.views.len(),
                self.config.scales
            )));
        }
        let n = xm.rows();
        let scales = self.config.scales;
        let xw = xm.matmul_nt(&self.wx.value)?;
        let mut z_views = Vec::with_capacity(scales);
        let mut t_views = Vec::with_capacity(scales);
        let mut omega = DenseMatrix::zeros(n, scales);
        for (l, view) in stack.views.iter().enumerate() {
            let zl = relu(&view.matmul(&self.w1.value)?);
            let mut u = zl.matmul_nt(&self.wz.value)?;
            u.add_assign(&xw)?;
            let t = u.map(|v| v.tanh());
            let w = t.matmul(&self.q.value)?;
            for i in 0..n {
                omega[(i, l)] = w[(i, 0)];
            }
            z_views.push(zl);
            t_views.push(t);
        }
        let attn = softmax_rows(&omega);
        let mut z = DenseMatrix::zeros(n, self.config.hidden);
        for (l, zl) in z_views.iter().enumerate() {
            for i in 0..n {
                let a = attn[(i, l)];
                for (o, &v) in z.row_mut(i).iter_mut().zip(zl.row(i)) {
                    *o += a * v;
                }
            }
        }
        let mut pre = z.matmul(&self.w2.value)?;
        let bias = self.b.value.row(0).to_vec();
        for i in 0..n {
            for (o, &bv) in pre.row_mut(i).iter_mut().zip(&bias) {
                *o += bv;
            }
        }
        let xhat = relu(&pre);
        Ok((AttrForwardOut { z, xhat, attn }, AttrCache { z_views, t_views }))
    }

    /// Accumulates parameter gradients given `∂L/∂X̂` and optionally `∂L/∂Z`.
    pub fn backward(
        &mut self,
        stack: &PropagationStack<T>,
        xm: &DenseMatrix<T>,
        out: &AttrForwardOut<T>,
        cache: &AttrCache<T>,
        grad_xhat: &DenseMatrix<T>,
        grad_z_extra: Option<&DenseMatrix<T>>,
    ) -> Result<()> {
        let n = xm.rows();
        let scales = self.config.scales;
        let g_pre = Activation::Relu.backward(&out.xhat, grad_xhat)?;
        self.w2.accumulate(&out.z.matmul_tn(&g_pre)?)?;
        self.b.accumulate(&g_pre.col_sums())?;
        let mut g_z = g_pre.matmul_nt(&self.w2.value)?;
        if let Some(extra) = grad_z_extra {
            g_z.add_assign(extra)?;
        }

        let mut g_attn = DenseMatrix::zeros(n, scales);
        for (l, zl) in cache.z_views.iter().enumerate() {
            for i in 0..n {
                g_attn[(i, l)] = g_z.row(i).iter().zip(zl.row(i)).map(|(&a, &b)| a * b).sum();
            }
        }
        let g_omega = softmax_rows_backward(&out.attn, &g_attn)?;

        let mut g_wx = DenseMatrix::zeros(self.wx.value.rows(), self.wx.value.cols());
        for l in 0..scales {
            let (zl, t) = (&cache.z_views[l], &cache.t_views[l]);
            let g_w = DenseMatrix::from_fn(n, 1, |i, _| g_omega[(i, l)]);
            self.q.accumulate(&t.matmul_tn(&g_w)?)?;
            let g_t = g_w.matmul_nt(&self.q.value)?;
            let g_u = t.zip_map(&g_t, "tanh_backward", |y, g| g * (T::one() - y * y))?;
            self.wz.accumulate(&g_u.matmul_tn(zl)?)?;
            g_wx.add_assign(&g_u.matmul_tn(xm)?)?;

            let mut g_zl = g_u.matmul(&self.wz.value)?;
            for i in 0..n {
                let a = out.attn[(i, l)];
                for (o, &v) in g_zl.row_mut(i).iter_mut().zip(g_z.row(i)) {
                    *o += a * v;
                }
            }
            let g_p = Activation::Relu.backward(zl, &g_zl)?;
            self.w1.accumulate(&stack.views[l].matmul_tn(&g_p)?)?;
        }
        self.wx.accumulate(&g_wx)
    }
}

/// Squared reconstruction error, optionally restricted to `rows`, with
/// its gradient with respect to `X̂`.
pub fn attr_loss<T: Scalar>(
    out: &AttrForwardOut<T>,
    x_real: &DenseMatrix<T>,
    rows: Option<&[usize]>,
) -> Result<(T, DenseMatrix<T>)> {
    match rows {
        Some(r) => masked_row_loss(&out.xhat, x_real, r),
        None => crate::nn::frobenius_loss(&out.xhat, x_real),
    }
}

impl<T: Scalar> Parameterized<T> for AttrModel<T> {
    fn params(&self) -> Vec<(String, &Param<T>)> {
        vec![
            ("attr.w1".into(), &self.w1),
            ("attr.q".into(), &self.q),
            ("attr.wz".into(), &self.wz),
            ("attr.wx".into(), &self.wx),
            ("attr.w2".into(), &self.w2),
            ("attr.b".into(), &self.b),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        vec![
            ("attr.w1".into(), &mut self.w1),
            ("attr.q".into(), &mut self.q),
            ("attr.wz".into(), &mut self.wz),
            ("attr.wx".into(), &mut self.wx),
            ("attr.w2".into(), &mut self.w2),
            ("attr.b".into(), &mut self.b),
        ]
    }
}

impl<T: Scalar> Channel<T> for AttrModel<T> {
    fn kind(&self) -> ChannelKind {
        ChannelKind::Attr
    }

    fn embedding_dim(&self) -> usize {
        self.config.hidden
    }

    fn embed(&self, data: &GraphData<T>) -> Result<DenseMatrix<T>> {
        let (stack, xm) = self.masked_inputs(data, &[])?;
        Ok(self.forward(&stack, &xm)?.0.z)
    }

    fn accumulate_step(
        &mut self,
        data: &GraphData<T>,
        rng: &mut ChaCha8Rng,
        recon_weight: T,
        extra: Option<&EmbeddingObjective<'_, T>>,
    ) -> Result<StepLoss> {
        let targets = sample_targets(data.n(), self.config.mask_ratio, rng);
        let (stack, xm) = self.masked_inputs(data, &targets)?;
        let (out, cache) = self.forward(&stack, &xm)?;
        let (recon, grad) = attr_loss(&out, data.graph.attributes(), Some(&targets))?;
        let (distill, g_z) = match extra {
            Some(f) => {
                let (l, g) = f(&out.z)?;
                (l, Some(g))
            }
            None => (T::zero(), None),
        };
        self.backward(&stack, &xm, &out, &cache, &grad.scale(recon_weight), g_z.as_ref())?;
        Ok(StepLoss {
            recon: recon.as_f64(),
            distill: distill.as_f64(),
            total: 0.0,
        })
    }

    fn score(&self, data: &GraphData<T>) -> Result<Vec<T>> {
        let mut scores = vec![T::zero(); data.n()];
        for batch in score_batches(data.n(), self.config.score_batch) {
            let (stack, xm) = self.masked_inputs(data, &batch)?;
            let (out, _) = self.forward(&stack, &xm)?;
            row_errors(&out.xhat, data.graph.attributes(), &batch, &mut scores);
        }
        Ok(scores)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "channel": "attr", "num_features": self.num_features(), "config": self.config })
    }
}
