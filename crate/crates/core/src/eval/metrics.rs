use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub macro_f1: f64,
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::arg(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Value(format!("non-finite score {s}")));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    Ok((pos, labels.len() - pos))
}

/// Indices sorted by descending score; equal scores keep index order.
pub(crate) fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Mann-Whitney statistic with midranks for ties.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined("AUC-ROC needs both classes".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share their mean
        let mid = (start + 1 + end) as f64 / 2.0;
        rank_sum += mid * idx[start..end].iter().filter(|&&i| labels[i]).count() as f64;
        start = end;
    }
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Average precision: `Σ (R_k − R_{k−1})·P_k` over groups of tied scores.
pub fn auc_pr(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    if pos == 0 {
        return Err(Error::Undefined("AUC-PR needs at least one positive".into()));
    }
    let idx = descending(scores);
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let new_tp = idx[start..end].iter().filter(|&&i| labels[i]).count();
        tp += new_tp;
        seen = end;
        ap += (new_tp as f64 / pos as f64) * (tp as f64 / seen as f64);
        start = end;
    }
    debug_assert_eq!(seen, idx.len());
    Ok(ap)
}

/// Macro F1 over {anomaly, normal} with the top `k` scores predicted
/// anomalous.
pub fn macro_f1(scores: &[f64], labels: &[bool], k: usize) -> Result<f64> {
    check(scores, labels)?;
    let n = scores.len();
    if k == 0 || k >= n {
        return Err(Error::arg(format!("top-k threshold {k} outside 1..{n}")));
    }
    let mut predicted = vec![false; n];
    for &i in &descending(scores)[..k] {
        predicted[i] = true;
    }
    let f1 = |class: bool| {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (&p, &l) in predicted.iter().zip(labels) {
            match (p == class, l == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        }
    };
    Ok((f1(true) + f1(false)) / 2.0)
}

/// All three metrics, with `k` set to the number of positives.
pub fn evaluate(scores: &[f64], labels: &[bool]) -> Result<Metrics> {
    let k = labels.iter().filter(|&&l| l).count();
    Ok(Metrics {
        auc_roc: auc_roc(scores, labels)?,
        auc_pr: auc_pr(scores, labels)?,
        macro_f1: macro_f1(scores, labels, k)?,
    })
}
