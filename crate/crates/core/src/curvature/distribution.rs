use crate::error::{Error, Result};
use crate::graph::Adjacency;

/// Probability mass over a finite set of nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution {
    pub support: Vec<usize>,
    pub mass: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        if support.len() != mass.len() {
            return Err(Error::arg("support and mass lengths differ"));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::Value("masses must be finite and nonnegative".into()));
        }
        let mut seen = support.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != support.len() {
            return Err(Error::arg("support ids must be distinct"));
        }
        Ok(Self { support, mass })
    }

    pub fn point(node: usize) -> Self {
        Self {
            support: vec![node],
            mass: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mass_of(&self, node: usize) -> f64 {
        self.support
            .iter()
            .position(|&s| s == node)
            .map_or(0.0, |p| self.mass[p])
    }
}

/// Lazy random-walk measure: `alpha` at `i`, the rest spread evenly over
/// its neighbors.
pub fn base_distribution(adj: &Adjacency, i: usize, alpha: f64) -> Result<DiscreteDistribution> {
    if i >= adj.len() {
        return Err(Error::Index { id: i, n: adj.len() });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::arg(format!("alpha = {alpha} outside [0, 1]")));
    }
    let k = adj.degree(i);
    if k == 0 {
        return Err(Error::Value(format!("node {i} is isolated")));
    }
    let mut support = Vec::with_capacity(k + 1);
    let mut mass = Vec::with_capacity(k + 1);
    support.push(i);
    mass.push(alpha);
    let share = (1.0 - alpha) / k as f64;
    for &x in adj.neighbors(i) {
        support.push(x);
        mass.push(share);
    }
    Ok(DiscreteDistribution { support, mass })
}

/// Measure of `i` towards neighbor `j`: common neighbors of the pair gain
/// `S′/|common|` and the remaining neighbors lose `S′/|uncommon|`, with
/// `S′ = s / (1 − δ)`. `j` itself counts as an uncommon neighbor. Negative
/// masses are clamped and the vector renormalized; an empty group drops
/// the similarity term.
pub fn mixed_distribution(
    adj: &Adjacency,
    i: usize,
    j: usize,
    delta: f64,
    s: f64,
) -> Result<DiscreteDistribution> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::arg(format!("delta = {delta} outside [0, 1)")));
    }
    if !s.is_finite() || s < 0.0 {
        return Err(Error::arg(format!("similarity {s} must be finite and nonnegative")));
    }
    if i >= adj.len() || j >= adj.len() {
        return Err(Error::Index { id: i.max(j), n: adj.len() });
    }
    if !adj.has_edge(i, j) {
        return Err(Error::arg(format!("{i} and {j} are not adjacent")));
    }
    let ni = adj.neighbors(i);
    let k = ni.len() as f64;
    let common: Vec<bool> = ni.iter().map(|&x| adj.has_edge(j, x)).collect();
    let n_common = common.iter().filter(|c| **c).count();
    let n_uncommon = ni.len() - n_common;
    let s_prime = if n_common == 0 || n_uncommon == 0 { 0.0 } else { s / (1.0 - delta) };

    let mut support = Vec::with_capacity(ni.len() + 1);
    let mut mass = Vec::with_capacity(ni.len() + 1);
    support.push(i);
    mass.push(delta);
    for (&x, &is_common) in ni.iter().zip(&common) {
        let m = if is_common {
            (1.0 - delta + s_prime / n_common as f64) / k
        } else {
            (1.0 - delta - s_prime / n_uncommon as f64) / k
        };
        support.push(x);
        mass.push(m.max(0.0));
    }
    let total: f64 = mass.iter().sum();
    for m in &mut mass {
        *m /= total;
    }
    Ok(DiscreteDistribution { support, mass })
}
