use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use crate::error::{Error, Result};
use crate::graph::Label;

pub const SCORE_HEADER: [&str; 7] = ["id", "as_attr", "as_str", "as_mix", "as_combined", "rank", "label"];

/// One row of the scores CSV. `label` is the node class code, empty when
/// the graph is unlabeled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: usize,
    pub as_attr: f64,
    pub as_str: f64,
    pub as_mix: f64,
    pub as_combined: f64,
    pub rank: usize,
    pub label: Option<u8>,
}

impl ScoreRecord {
    pub fn label(&self) -> Result<Option<Label>> {
        self.label
            .map(|c| Label::from_code(c).ok_or_else(|| Error::Value(format!("unknown label code {c}"))))
            .transpose()
    }
}

/// AUC-ROC of each channel against normal nodes plus the anomaly type it
/// targets. `None` when that type is absent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelAuc {
    pub attr: Option<f64>,
    pub structure: Option<f64>,
    pub mix: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    pub lambdas: Option<[f64; 3]>,
    /// Over every labeled node.
    pub metrics: Option<Metrics>,
    /// Over the nodes held out from weight selection.
    pub test_metrics: Option<Metrics>,
    pub channel_auc: Option<ChannelAuc>,
    pub records: Vec<ScoreRecord>,
}

impl AnomalyReport {
    pub fn headline_auc(&self) -> Option<f64> {
        self.test_metrics.or(self.metrics).map(|m| m.auc_roc)
    }

    pub fn labels(&self) -> Result<Option<Vec<Label>>> {
        let labels: Vec<Option<Label>> = self.records.iter().map(|r| r.label()).collect::<Result<_>>()?;
        Ok(labels.into_iter().collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: e.to_string(),
    }
}

pub fn write_scores_csv(records: &[ScoreRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scores_csv(path: impl AsRef<Path>) -> Result<Vec<ScoreRecord>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(SCORE_HEADER) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header `{}`", SCORE_HEADER.join(",")),
        });
    }
    let records: Vec<ScoreRecord> = r
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| csv_err(path, e))?;
    for (k, rec) in records.iter().enumerate() {
        if rec.id != k {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: k + 2,
                msg: format!("expected id {k}, found {}", rec.id),
            });
        }
        rec.label()?;
    }
    Ok(records)
}
