use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::combine::{combine_scores, ranks};
use super::metrics::{auc_roc, evaluate};
use super::report::{AnomalyReport, ChannelAuc, ScoreRecord};
use crate::channels::{Channel, GraphData};
use crate::config::{Config, ScoreConfig};
use crate::distill::{derive_seed, TrainedModels};
use crate::error::{Error, Result};
use crate::graph::Label;
use crate::scalar::Scalar;

/// Raw per-node scores of the three channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelScores {
    pub attr: Vec<f64>,
    pub structure: Vec<f64>,
    pub mix: Vec<f64>,
}

impl ChannelScores {
    pub fn compute<T: Scalar>(models: &TrainedModels<T>, data: &GraphData<T>) -> Result<Self> {
        let f = |c: &dyn Channel<T>| -> Result<Vec<f64>> { Ok(c.score(data)?.into_iter().map(|v| v.as_f64()).collect()) };
        Ok(Self {
            attr: f(&models.attr)?,
            structure: f(&models.structure)?,
            mix: f(&models.mix)?,
        })
    }

    pub fn len(&self) -> usize {
        self.attr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attr.is_empty()
    }

    pub fn combine(&self, lambdas: [f64; 3]) -> Result<Vec<f64>> {
        combine_scores(&self.attr, &self.structure, &self.mix, lambdas)
    }

    fn subset(&self, idx: &[usize]) -> Self {
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect();
        Self {
            attr: pick(&self.attr),
            structure: pick(&self.structure),
            mix: pick(&self.mix),
        }
    }
}

fn auc_against_normals(scores: &[f64], labels: &[Label], target: Label) -> Result<Option<f64>> {
    let (s, l): (Vec<f64>, Vec<bool>) = scores
        .iter()
        .zip(labels)
        .filter(|(_, &lab)| lab == target || lab == Label::Normal)
        .map(|(&s, &lab)| (s, lab == target))
        .unzip();
    if !l.iter().any(|&x| x) || l.iter().all(|&x| x) {
        return Ok(None);
    }
    auc_roc(&s, &l).map(Some)
}

/// Each channel scored on its own anomaly type versus normal nodes.
pub fn channel_aucs(scores: &ChannelScores, labels: &[Label]) -> Result<ChannelAuc> {
    Ok(ChannelAuc {
        attr: auc_against_normals(&scores.attr, labels, Label::AttrAnom)?,
        structure: auc_against_normals(&scores.structure, labels, Label::StructAnom)?,
        mix: auc_against_normals(&scores.mix, labels, Label::MixedAnom)?,
    })
}

/// Validation and test node sets, stratified by the binary label.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn stratified_split(flags: &[bool], val_fraction: f64, seed: u64) -> Result<Split> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::arg(format!("validation fraction {val_fraction} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut val, mut test) = (Vec::new(), Vec::new());
    for class in [true, false] {
        let mut members: Vec<usize> = (0..flags.len()).filter(|&i| flags[i] == class).collect();
        if members.len() < 2 {
            return Err(Error::Undefined("each class needs two nodes to split".into()));
        }
        members.shuffle(&mut rng);
        let k = ((val_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        val.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split { val, test })
}

/// Grid search over `grid³` for the weights with the highest AUC-ROC on
/// `idx`. The first maximum in grid order wins.
pub fn select_lambdas(scores: &ChannelScores, flags: &[bool], idx: &[usize], grid: &[f64]) -> Result<([f64; 3], f64)> {
    if grid.is_empty() {
        return Err(Error::arg("empty weight grid"));
    }
    let sub = scores.subset(idx);
    let labels: Vec<bool> = idx.iter().map(|&i| flags[i]).collect();
    let mut best: Option<([f64; 3], f64)> = None;
    for &l1 in grid {
        for &l2 in grid {
            for &l3 in grid {
                let l = [l1, l2, l3];
                if l.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let auc = auc_roc(&sub.combine(l)?, &labels)?;
                if best.is_none_or(|(_, b)| auc > b) {
                    best = Some((l, auc));
                }
            }
        }
    }
    best.ok_or_else(|| Error::arg("weight grid has no nonzero combination"))
}

/// Scores, ranks and, when labels exist, metrics. With `tune_lambdas` the
/// weights are picked on a validation split and test metrics are reported
/// on the remaining nodes.
pub fn build_report(scores: &ChannelScores, labels: Option<&[Label]>, cfg: &Config) -> Result<AnomalyReport> {
    let n = scores.len();
    if let Some(l) = labels {
        if l.len() != n {
            return Err(Error::arg(format!("{} labels for {n} scored nodes", l.len())));
        }
    }
    let sc: &ScoreConfig = &cfg.score;
    let flags: Option<Vec<bool>> = labels.map(|l| l.iter().map(|x| x.is_anomaly()).collect());
    let has_both = flags.as_ref().is_some_and(|f| f.iter().any(|&x| x) && f.iter().any(|&x| !x));

    let (lambdas, split) = match &flags {
        Some(f) if sc.tune_lambdas && has_both => {
            let split = stratified_split(f, sc.val_fraction, derive_seed(cfg.seed, &[0x5eed]))?;
            let (l, _) = select_lambdas(scores, f, &split.val, &sc.lambda_grid)?;
            (l, Some(split))
        }
        _ => (sc.lambdas, None),
    };
    let combined = scores.combine(lambdas)?;
    let rank = ranks(&combined);
    let records = (0..n)
        .map(|i| ScoreRecord {
            id: i,
            as_attr: scores.attr[i],
            as_str: scores.structure[i],
            as_mix: scores.mix[i],
            as_combined: combined[i],
            rank: rank[i],
            label: labels.map(|l| l[i].code()),
        })
        .collect();

    let (metrics, test_metrics, channel_auc) = match (&flags, labels) {
        (Some(f), Some(l)) if has_both => {
            let test = match &split {
                Some(s) => {
                    let c: Vec<f64> = s.test.iter().map(|&i| combined[i]).collect();
                    let t: Vec<bool> = s.test.iter().map(|&i| f[i]).collect();
                    Some(evaluate(&c, &t)?)
                }
                None => None,
            };
            (Some(evaluate(&combined, f)?), test, Some(channel_aucs(scores, l)?))
        }
        _ => (None, None, None),
    };
    Ok(AnomalyReport {
        seed: Some(cfg.seed),
        config_hash: Some(cfg.hash()),
        lambdas: Some(lambdas),
        metrics,
        test_metrics,
        channel_auc,
        records,
    })
}

/// Metrics recomputed from score records alone (the `eval` path).
pub fn report_from_records(records: Vec<super::report::ScoreRecord>) -> Result<AnomalyReport> {
    let labels: Option<Vec<Label>> = records.iter().map(|r| r.label()).collect::<Result<Vec<_>>>()?.into_iter().collect();
    let labels = labels.ok_or_else(|| Error::Undefined("scores carry no labels".into()))?;
    let flags: Vec<bool> = labels.iter().map(|l| l.is_anomaly()).collect();
    let combined: Vec<f64> = records.iter().map(|r| r.as_combined).collect();
    let scores = ChannelScores {
        attr: records.iter().map(|r| r.as_attr).collect(),
        structure: records.iter().map(|r| r.as_str).collect(),
        mix: records.iter().map(|r| r.as_mix).collect(),
    };
    Ok(AnomalyReport {
        seed: None,
        config_hash: None,
        lambdas: None,
        metrics: Some(evaluate(&combined, &flags)?),
        test_metrics: None,
        channel_auc: Some(channel_aucs(&scores, &labels)?),
        records,
    })
}
