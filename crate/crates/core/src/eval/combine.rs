use crate::error::{Error, Result};

use super::metrics::descending;

/// Rescales to `[0, 1]`; a constant vector maps to all zeros.
pub fn min_max_normalize(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![0.0; v.len()];
    }
    v.iter().map(|&x| (x - lo) / span).collect()
}

/// `λ1·attr + λ2·str + λ3·mix` over min-max normalized channel scores.
pub fn combine_scores(attr: &[f64], structure: &[f64], mix: &[f64], lambdas: [f64; 3]) -> Result<Vec<f64>> {
    let n = attr.len();
    if structure.len() != n || mix.len() != n {
        return Err(Error::arg(format!(
            "channel score lengths differ: {}, {}, {}",
            n,
            structure.len(),
            mix.len()
        )));
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::arg(format!("weights must be finite and nonnegative, got {lambdas:?}")));
    }
    if lambdas.iter().all(|&l| l == 0.0) {
        return Err(Error::arg("at least one channel weight must be positive"));
    }
    for s in [attr, structure, mix] {
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::Value("non-finite channel score".into()));
        }
    }
    let [a, s, m] = [attr, structure, mix].map(min_max_normalize);
    Ok((0..n)
        .map(|i| lambdas[0] * a[i] + lambdas[1] * s[i] + lambdas[2] * m[i])
        .collect())
}

/// 1-based ranks, highest score first; ties go to the lower index.
pub fn ranks(scores: &[f64]) -> Vec<usize> {
    let mut r = vec![0; scores.len()];
    for (pos, i) in descending(scores).into_iter().enumerate() {
        r[i] = pos + 1;
    }
    r
}
