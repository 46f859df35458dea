//! Finite-difference verification of every hand-written backward pass,
//! from single layers up to full channel training steps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{AttrConfig, AttrModel, Channel, GraphData, MixConfig, MixModel, StructConfig, StructModel};
use crate::distill::{sample_triplets, triplet_distill, triplet_loss};
use crate::error::Result;
use crate::graph::synthetic::{two_community, TwoCommunityConfig};
use crate::graph::normalize_adjacency;
use crate::linalg::DenseMatrix;
use crate::nn::{
    frobenius_loss, gcn_backward, gcn_forward, grad_check, init_params, linear_backward, linear_forward,
    masked_row_loss, softmax_rows, softmax_rows_backward, Activation, Differentiable, Param, Parameterized,
};

type M = DenseMatrix<f64>;

pub const GRADCHECK_EPS: f64 = 1e-5;
pub const GRADCHECK_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckCase {
    pub name: String,
    pub max_rel_error: f64,
    pub entries_checked: usize,
    pub passed: bool,
}

struct Params(Vec<(String, Param<f64>)>);

impl Parameterized<f64> for Params {
    fn params(&self) -> Vec<(String, &Param<f64>)> {
        self.0.iter().map(|(n, p)| (n.clone(), p)).collect()
    }
    fn params_mut(&mut self) -> Vec<(String, &mut Param<f64>)> {
        self.0.iter_mut().map(|(n, p)| (n.clone(), p)).collect()
    }
}

/// A model plus the objective evaluated on it.
struct Probe<P, F> {
    model: P,
    objective: F,
}

impl<P: Parameterized<f64>, F> Parameterized<f64> for Probe<P, F> {
    fn params(&self) -> Vec<(String, &Param<f64>)> {
        self.model.params()
    }
    fn params_mut(&mut self) -> Vec<(String, &mut Param<f64>)> {
        self.model.params_mut()
    }
}

impl<P: Parameterized<f64>, F: FnMut(&mut P) -> Result<f64>> Differentiable<f64> for Probe<P, F> {
    fn loss_and_grad(&mut self) -> Result<f64> {
        self.model.zero_grad();
        (self.objective)(&mut self.model)
    }
}

fn run<P, F>(name: &str, model: P, objective: F, entries: usize) -> Result<GradcheckCase>
where
    P: Parameterized<f64>,
    F: FnMut(&mut P) -> Result<f64>,
{
    let mut probe = Probe { model, objective };
    let r = grad_check(&mut probe, GRADCHECK_EPS, entries)?;
    Ok(GradcheckCase {
        name: name.to_string(),
        max_rel_error: r.max_rel_error,
        entries_checked: r.entries_checked,
        passed: r.max_rel_error < GRADCHECK_TOL,
    })
}

fn fixture(i: usize, j: usize, a: usize, b: usize) -> f64 {
    ((i * a + j * b) % 13) as f64 / 13.0 - 0.45
}

fn small_data() -> Result<GraphData<f64>> {
    let g = two_community::<f64>(&TwoCommunityConfig {
        n: 16,
        d: 4,
        p_in: 0.4,
        p_out: 0.05,
        seed: 3,
        ..TwoCommunityConfig::default()
    })?;
    GraphData::new(g, 0.5)
}

/// One full training step of `channel` with a triplet term against a
/// fixed random teacher; the rng is reseeded so every evaluation draws the
/// same mask.
fn channel_case<C: Channel<f64>>(name: &str, channel: C, data: &GraphData<f64>) -> Result<GradcheckCase> {
    let n = data.n();
    let teacher = M::from_fn(n, channel.embedding_dim(), |i, j| fixture(i, j, 5, 3));
    let triplets = sample_triplets(n, n, 11)?;
    run(
        name,
        channel,
        move |c: &mut C| {
            let objective = |emb: &M| -> Result<(f64, M)> {
                let mut g = M::zeros(emb.rows(), emb.cols());
                let l = triplet_distill(emb, &teacher, &triplets, 0.5, 0.5, &mut g)?;
                Ok((0.5 * l, g))
            };
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let step = c.accumulate_step(data, &mut rng, 1.0, Some(&objective))?;
            Ok(step.recon + step.distill)
        },
        48,
    )
}

/// Runs every case; a case fails when its worst relative error reaches
/// [`GRADCHECK_TOL`].
pub fn gradcheck_suite() -> Result<Vec<GradcheckCase>> {
    let mut cases = Vec::new();
    let x = M::from_fn(6, 4, |i, j| fixture(i, j, 3, 7));
    let target = M::from_fn(6, 3, |i, j| fixture(i, j, 2, 5));

    for act in [Activation::Identity, Activation::Tanh, Activation::Sigmoid] {
        let model = Params(vec![("w".into(), init_params(4, 3, 1)), ("b".into(), init_params(1, 3, 2))]);
        let name = format!("linear+{}", serde_json::to_value(act)?.as_str().unwrap_or("act"));
        cases.push(run(
            &name,
            model,
            |p: &mut Params| {
                let (w, b) = p.0.split_at_mut(1);
                let pre = linear_forward(&x, &w[0].1, Some(&b[0].1))?;
                let out = act.apply(&pre);
                let (l, g) = frobenius_loss(&out, &target)?;
                let gp = act.backward(&out, &g)?;
                linear_backward(&x, &mut w[0].1, Some(&mut b[0].1), &gp)?;
                Ok(l)
            },
            64,
        )?);
    }

    let data = small_data()?;
    let lap = normalize_adjacency(&data.graph).matrix;
    let h = M::from_fn(16, 4, |i, j| fixture(i, j, 7, 3));
    let tgt = M::from_fn(16, 3, |i, j| fixture(i, j, 1, 4));
    cases.push(run(
        "gcn+sigmoid",
        Params(vec![("w".into(), init_params(4, 3, 3))]),
        |p: &mut Params| {
            let (out, cache) = gcn_forward(&lap, &h, &p.0[0].1, Activation::Sigmoid)?;
            let (l, g) = masked_row_loss(&out, &tgt, &[0, 3, 7, 15])?;
            gcn_backward(&lap, &cache, &mut p.0[0].1, Activation::Sigmoid, &g)?;
            Ok(l)
        },
        64,
    )?);

    cases.push(run(
        "softmax",
        Params(vec![("w".into(), init_params(4, 3, 4))]),
        |p: &mut Params| {
            let pre = linear_forward(&x, &p.0[0].1, None)?;
            let probs = softmax_rows(&pre);
            let (l, g) = frobenius_loss(&probs, &target)?;
            let gp = softmax_rows_backward(&probs, &g)?;
            linear_backward(&x, &mut p.0[0].1, None, &gp)?;
            Ok(l)
        },
        64,
    )?);

    let pos = M::from_fn(6, 4, |i, j| fixture(i, j, 4, 1));
    let neg = M::from_fn(6, 4, |i, j| fixture(i, j, 6, 5));
    cases.push(run(
        "triplet",
        Params(vec![("anchor".into(), Param::new(x.clone()))]),
        |p: &mut Params| {
            let (l, g) = triplet_loss(&p.0[0].1.value, &pos, &neg, 0.3)?;
            p.0[0].1.accumulate(&g)?;
            Ok(l)
        },
        64,
    )?);

    let attr = AttrModel::new(
        4,
        AttrConfig { hidden: 6, attn_hidden: 4, scales: 3, mask_ratio: 0.25, ..AttrConfig::default() },
        5,
    )?;
    cases.push(channel_case("attr-channel", attr, &data)?);
    let structure = StructModel::new(
        4,
        StructConfig { hidden: 6, k: 3, iterations: 3, mask_ratio: 0.25, ..StructConfig::default() },
        6,
    )?;
    cases.push(channel_case("struct-channel", structure, &data)?);
    let mix = MixModel::new(4, MixConfig { hidden: 6, layers: 3, delta: 0.5 }, 7)?;
    cases.push(channel_case("mix-channel", mix, &data)?);
    Ok(cases)
}
