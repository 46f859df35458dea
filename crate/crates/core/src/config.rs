//! Run configuration, read from TOML with one section per module.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{AttrConfig, MixConfig, StructConfig};
use crate::error::{Error, Result};
use crate::graph::InjectionConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    pub margin: f64,
    /// Weight of the reconstruction loss.
    pub eta1: f64,
    /// Weight of the distillation loss.
    pub eta2: f64,
    /// Triplets per teacher and epoch; `0` means one per node.
    pub triplets_per_epoch: usize,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            margin: 0.5,
            eta1: 1.0,
            eta2: 0.5,
            triplets_per_epoch: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSchedule {
    pub pretrain_epochs: usize,
    pub attr_epochs: usize,
    pub struct_epochs: usize,
    pub mix_epochs: usize,
    pub lr: f64,
    /// Train the three channels jointly on the summed losses with a shared
    /// first-layer encoder instead of the phased schedule.
    pub unified: bool,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            pretrain_epochs: 100,
            attr_epochs: 100,
            struct_epochs: 100,
            mix_epochs: 100,
            lr: 0.01,
            unified: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// `(λ1, λ2, λ3)` for attr, struct and mix, used when not tuned.
    pub lambdas: [f64; 3],
    /// Pick λ on a labeled validation split when labels are available.
    pub tune_lambdas: bool,
    pub val_fraction: f64,
    pub lambda_grid: Vec<f64>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            lambdas: [1.0, 1.0, 1.0],
            tune_lambdas: true,
            val_fraction: 0.3,
            lambda_grid: vec![0.1, 0.3, 0.5, 0.7, 0.9],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub attr: AttrConfig,
    #[serde(rename = "struct")]
    pub structure: StructConfig,
    pub mix: MixConfig,
    pub distill: DistillConfig,
    pub train: TrainSchedule,
    pub score: ScoreConfig,
    pub inject: InjectionConfig,
    /// Sweep grid: dotted key (e.g. `attr.alpha`) to the values it takes.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<toml::Value>>,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.attr.validate()?;
        self.structure.validate()?;
        self.mix.validate()?;
        let d = &self.distill;
        if !(d.margin >= 0.0 && d.margin.is_finite()) {
            return Err(Error::Config(format!("margin {} must be finite and >= 0", d.margin)));
        }
        if !(d.eta1 >= 0.0 && d.eta2 >= 0.0 && d.eta1 + d.eta2 > 0.0) {
            return Err(Error::Config("eta1, eta2 must be >= 0 with a positive sum".into()));
        }
        let t = &self.train;
        if t.pretrain_epochs == 0 || t.attr_epochs == 0 || t.struct_epochs == 0 || t.mix_epochs == 0 {
            return Err(Error::Config("every phase needs at least one epoch".into()));
        }
        if !(t.lr > 0.0 && t.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", t.lr)));
        }
        let s = &self.score;
        if s.lambdas.iter().any(|&l| !(l >= 0.0)) || s.lambdas.iter().all(|&l| l == 0.0) {
            return Err(Error::Config("lambdas must be >= 0 and not all zero".into()));
        }
        if !(s.val_fraction > 0.0 && s.val_fraction < 1.0) {
            return Err(Error::Config(format!("val_fraction {} outside (0, 1)", s.val_fraction)));
        }
        if s.lambda_grid.is_empty() || s.lambda_grid.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config("lambda_grid needs positive values".into()));
        }
        Ok(())
    }

    /// SHA-256 (hex) of the configuration serialized as JSON.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Number of cells in the sweep grid (1 when no grid is set).
    pub fn sweep_size(&self) -> usize {
        self.sweep.values().map(Vec::len).product()
    }

    /// Expands the sweep grid into concrete configurations. Cell `c` takes
    /// the seed `derive(seed, c)`; keys vary in lexicographic order with the
    /// last key varying fastest.
    pub fn expand_sweep(&self) -> Result<Vec<Config>> {
        let keys: Vec<&String> = self.sweep.keys().collect();
        let sizes: Vec<usize> = self.sweep.values().map(Vec::len).collect();
        if sizes.contains(&0) {
            return Err(Error::Config("sweep keys need at least one value".into()));
        }
        let mut base = self.clone();
        base.sweep.clear();
        let base_value = toml::Value::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
        let total = self.sweep_size();
        let mut cells = Vec::with_capacity(total);
        for c in 0..total {
            let mut value = base_value.clone();
            let mut rem = c;
            let mut picks = vec![0; keys.len()];
            for k in (0..keys.len()).rev() {
                picks[k] = rem % sizes[k];
                rem /= sizes[k];
            }
            for (k, key) in keys.iter().enumerate() {
                set_dotted(&mut value, key, self.sweep[*key][picks[k]].clone())?;
            }
            let mut cell: Config = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
            cell.seed = crate::distill::derive_seed(self.seed, &[c as u64]);
            cell.validate()?;
            cells.push(cell);
        }
        Ok(cells)
    }
}

fn set_dotted(root: &mut toml::Value, key: &str, v: toml::Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("sweep key `{key}` does not name a field")))?;
        if i + 1 == parts.len() {
            if !table.contains_key(*part) {
                return Err(Error::Config(format!("unknown sweep key `{key}`")));
            }
            table.insert((*part).to_string(), v);
            return Ok(());
        }
        cur = table
            .get_mut(*part)
            .ok_or_else(|| Error::Config(format!("unknown sweep key `{key}`")))?;
    }
    Ok(())
}
