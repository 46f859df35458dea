use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sample_triplets, triplet_distill};
use crate::channels::{AttrModel, Channel, ChannelKind, GraphData, MixModel, StepLoss, StructModel};
use crate::config::{Config, DistillConfig};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::nn::{Adam, AdamConfig, Checkpoint, Param, Parameterized};
use crate::scalar::Scalar;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const CHECKPOINT_NAMES: [&str; 4] = ["phase1-struct.ckpt", "phase2-attr.ckpt", "phase3-struct.ckpt", "phase4-mix.ckpt"];
pub const UNIFIED_CHECKPOINT: &str = "unified.ckpt";

/// SplitMix64 finalizer folded over `parts`; gives independent streams
/// from one base seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(z << 6).wrapping_add(z >> 2);
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: u8,
    pub channel: ChannelKind,
    pub teachers: Vec<ChannelKind>,
    pub losses: Vec<StepLoss>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub config_hash: String,
    pub unified: bool,
    pub num_features: usize,
    pub config: Config,
    pub phases: Vec<PhaseReport>,
    pub checkpoints: Vec<String>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_NAME))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join(MANIFEST_NAME), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainedModels<T> {
    pub attr: AttrModel<T>,
    pub structure: StructModel<T>,
    pub mix: MixModel<T>,
}

impl<T: Scalar> TrainedModels<T> {
    /// Freshly initialized channels; each draws from its own seed stream.
    pub fn init(num_features: usize, cfg: &Config) -> Result<Self> {
        Ok(Self {
            attr: AttrModel::new(num_features, cfg.attr.clone(), derive_seed(cfg.seed, &[1]))?,
            structure: StructModel::new(num_features, cfg.structure.clone(), derive_seed(cfg.seed, &[2]))?,
            mix: MixModel::new(num_features, cfg.mix.clone(), derive_seed(cfg.seed, &[3]))?,
        })
    }

    pub fn channels(&self) -> [&dyn Channel<T>; 3] {
        [&self.attr, &self.structure, &self.mix]
    }
}

impl<T: Scalar> Parameterized<T> for TrainedModels<T> {
    fn params(&self) -> Vec<(String, &Param<T>)> {
        let mut v = self.attr.params();
        v.extend(self.structure.params());
        v.extend(self.mix.params());
        v
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        let mut v = self.attr.params_mut();
        v.extend(self.structure.params_mut());
        v.extend(self.mix.params_mut());
        v
    }
}

fn adam<T: Scalar>(lr: f64) -> Adam<T> {
    Adam::new(AdamConfig {
        lr,
        ..AdamConfig::default()
    })
}

fn step_all<T: Scalar, M: Parameterized<T> + ?Sized>(opt: &mut Adam<T>, model: &mut M) -> Result<()> {
    let mut ps: Vec<&mut Param<T>> = model.params_mut().into_iter().map(|(_, p)| p).collect();
    opt.step(&mut ps)
}

/// Trains `student` for `epochs` steps on `η1·L_recon + η2·Σ L_distill`
/// against the frozen embeddings of `teachers`, computed once up front.
#[allow(clippy::too_many_arguments)]
pub fn train_phase<T: Scalar>(
    phase: u8,
    student: &mut dyn Channel<T>,
    teachers: &[&dyn Channel<T>],
    data: &GraphData<T>,
    distill: &DistillConfig,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<PhaseReport> {
    let n = data.n();
    let eta1 = T::lit(distill.eta1);
    let eta2 = T::lit(distill.eta2);
    let margin = T::lit(distill.margin);
    let use_teachers = distill.eta2 > 0.0 && !teachers.is_empty();
    let mut teacher_emb = Vec::new();
    if use_teachers {
        for t in teachers {
            if t.embedding_dim() != student.embedding_dim() {
                return Err(Error::Config(format!(
                    "{} embedding width {} differs from {} width {}",
                    t.kind().name(),
                    t.embedding_dim(),
                    student.kind().name(),
                    student.embedding_dim()
                )));
            }
            teacher_emb.push(t.embed(data)?);
        }
    }
    let count = if distill.triplets_per_epoch == 0 { n } else { distill.triplets_per_epoch };

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[phase as u64, 0]));
    let mut opt = adam::<T>(lr);
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        student.zero_grad();
        let triplets = if use_teachers {
            sample_triplets(n, count, derive_seed(seed, &[phase as u64, 1, epoch as u64]))?
        } else {
            Vec::new()
        };
        let objective = |emb: &DenseMatrix<T>| -> Result<(T, DenseMatrix<T>)> {
            let mut grad = DenseMatrix::zeros(emb.rows(), emb.cols());
            let mut loss = T::zero();
            for t in &teacher_emb {
                loss += triplet_distill(emb, t, &triplets, margin, eta2, &mut grad)?;
            }
            Ok((loss, grad))
        };
        let extra: Option<&crate::channels::EmbeddingObjective<'_, T>> =
            if use_teachers { Some(&objective) } else { None };
        let mut step = student.accumulate_step(data, &mut rng, eta1, extra)?;
        step.total = distill.eta1 * step.recon + distill.eta2 * step.distill;
        if !step.total.is_finite() {
            return Err(Error::Diverged { phase, epoch });
        }
        step_all(&mut opt, student)?;
        losses.push(step);
    }
    Ok(PhaseReport {
        phase,
        channel: student.kind(),
        teachers: if use_teachers { teachers.iter().map(|t| t.kind()).collect() } else { Vec::new() },
        losses,
    })
}

fn save_checkpoint<T: Scalar, M: Parameterized<T> + ?Sized>(
    dir: Option<&Path>,
    name: &str,
    model: &M,
    seed: u64,
    meta: serde_json::Value,
) -> Result<()> {
    if let Some(dir) = dir {
        Checkpoint::from_model(model, seed, meta).save(dir.join(name))?;
    }
    Ok(())
}

fn manifest(cfg: &Config, num_features: usize, unified: bool, phases: Vec<PhaseReport>, checkpoints: Vec<String>) -> RunManifest {
    RunManifest {
        seed: cfg.seed,
        config_hash: cfg.hash(),
        unified,
        num_features,
        config: cfg.clone(),
        phases,
        checkpoints,
    }
}

/// The four-phase schedule: structure pre-training, attribute with the
/// structure teacher, structure (warm-started) with the attribute teacher,
/// then mixture with both. Checkpoints and the manifest go to `out_dir`.
pub fn orchestrate<T: Scalar>(
    data: &GraphData<T>,
    cfg: &Config,
    out_dir: Option<&Path>,
) -> Result<(TrainedModels<T>, RunManifest)> {
    cfg.validate()?;
    if cfg.train.unified {
        return train_unified(data, cfg, out_dir);
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let d = data.graph.num_features();
    let mut m = TrainedModels::<T>::init(d, cfg)?;
    let (t, dist, seed) = (&cfg.train, &cfg.distill, cfg.seed);
    let mut phases = Vec::with_capacity(4);

    phases.push(train_phase(1, &mut m.structure, &[], data, dist, t.pretrain_epochs, t.lr, seed)?);
    save_checkpoint(out_dir, CHECKPOINT_NAMES[0], &m.structure, seed, m.structure.describe())?;

    m.structure.set_frozen(true);
    phases.push(train_phase(2, &mut m.attr, &[&m.structure], data, dist, t.attr_epochs, t.lr, seed)?);
    save_checkpoint(out_dir, CHECKPOINT_NAMES[1], &m.attr, seed, m.attr.describe())?;

    m.attr.set_frozen(true);
    m.structure.set_frozen(false);
    phases.push(train_phase(3, &mut m.structure, &[&m.attr], data, dist, t.struct_epochs, t.lr, seed)?);
    save_checkpoint(out_dir, CHECKPOINT_NAMES[2], &m.structure, seed, m.structure.describe())?;

    m.structure.set_frozen(true);
    phases.push(train_phase(4, &mut m.mix, &[&m.attr, &m.structure], data, dist, t.mix_epochs, t.lr, seed)?);
    save_checkpoint(out_dir, CHECKPOINT_NAMES[3], &m.mix, seed, m.mix.describe())?;

    m.attr.set_frozen(false);
    m.structure.set_frozen(false);
    let checkpoints = if out_dir.is_some() { CHECKPOINT_NAMES.iter().map(|s| s.to_string()).collect() } else { Vec::new() };
    let man = manifest(cfg, d, false, phases, checkpoints);
    if let Some(dir) = out_dir {
        man.save(dir)?;
    }
    Ok((m, man))
}

/// Joint training baseline: the first-layer encoders of all three channels
/// are one shared `d × h` matrix and every step descends the sum of the
/// three reconstruction losses, without distillation.
pub fn train_unified<T: Scalar>(
    data: &GraphData<T>,
    cfg: &Config,
    out_dir: Option<&Path>,
) -> Result<(TrainedModels<T>, RunManifest)> {
    let (ha, hs, hm) = (cfg.attr.hidden, cfg.structure.hidden, cfg.mix.hidden);
    if ha != hs || ha != hm {
        return Err(Error::Config(format!("unified mode needs equal hidden widths, got {ha}, {hs}, {hm}")));
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let d = data.graph.num_features();
    let mut m = TrainedModels::<T>::init(d, cfg)?;
    let mut shared = m.attr.w1.clone();
    let eta1 = T::lit(cfg.distill.eta1.max(f64::MIN_POSITIVE));
    let epochs = cfg.train.attr_epochs.max(cfg.train.struct_epochs).max(cfg.train.mix_epochs);
    let seed = cfg.seed;
    let mut rngs = [2u64, 3, 4].map(|p| ChaCha8Rng::seed_from_u64(derive_seed(seed, &[p, 0])));
    let mut opt = adam::<T>(cfg.train.lr);
    let mut losses = Vec::with_capacity(epochs);

    for epoch in 0..epochs {
        m.attr.w1.value = shared.value.clone();
        m.structure.w3.value = shared.value.clone();
        m.mix.weights[0].value = shared.value.clone();
        m.zero_grad();
        shared.zero_grad();
        let [ra, rs, rm] = &mut rngs;
        let la = m.attr.accumulate_step(data, ra, eta1, None)?;
        let ls = m.structure.accumulate_step(data, rs, eta1, None)?;
        let lm = m.mix.accumulate_step(data, rm, eta1, None)?;
        let recon = la.recon + ls.recon + lm.recon;
        if !recon.is_finite() {
            return Err(Error::Diverged { phase: 0, epoch });
        }
        for g in [&m.attr.w1.grad, &m.structure.w3.grad, &m.mix.weights[0].grad] {
            shared.grad.add_assign(g)?;
        }
        m.attr.w1.frozen = true;
        m.structure.w3.frozen = true;
        m.mix.weights[0].frozen = true;
        {
            let mut ps: Vec<&mut Param<T>> = vec![&mut shared];
            ps.extend(m.params_mut().into_iter().map(|(_, p)| p));
            opt.step(&mut ps)?;
        }
        m.attr.w1.frozen = false;
        m.structure.w3.frozen = false;
        m.mix.weights[0].frozen = false;
        losses.push(StepLoss {
            recon,
            distill: 0.0,
            total: cfg.distill.eta1 * recon,
        });
    }
    m.attr.w1.value = shared.value.clone();
    m.structure.w3.value = shared.value.clone();
    m.mix.weights[0].value = shared.value;

    let report = PhaseReport {
        phase: 0,
        channel: ChannelKind::Mix,
        teachers: Vec::new(),
        losses,
    };
    let meta = serde_json::json!({ "mode": "unified", "num_features": d });
    save_checkpoint(out_dir, UNIFIED_CHECKPOINT, &m, seed, meta)?;
    let checkpoints = if out_dir.is_some() { vec![UNIFIED_CHECKPOINT.to_string()] } else { Vec::new() };
    let man = manifest(cfg, d, true, vec![report], checkpoints);
    if let Some(dir) = out_dir {
        man.save(dir)?;
    }
    Ok((m, man))
}

/// Rebuilds the trained channels from a run directory written by
/// [`orchestrate`].
pub fn load_models<T: Scalar>(dir: &Path) -> Result<(TrainedModels<T>, RunManifest)> {
    let man = RunManifest::load(dir)?;
    let mut m = TrainedModels::<T>::init(man.num_features, &man.config)?;
    if man.unified {
        Checkpoint::load(dir.join(UNIFIED_CHECKPOINT))?.restore_into(&mut m)?;
    } else {
        Checkpoint::load(dir.join(CHECKPOINT_NAMES[1]))?.restore_into(&mut m.attr)?;
        Checkpoint::load(dir.join(CHECKPOINT_NAMES[2]))?.restore_into(&mut m.structure)?;
        Checkpoint::load(dir.join(CHECKPOINT_NAMES[3]))?.restore_into(&mut m.mix)?;
    }
    Ok((m, man))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::synthetic::{two_community, TwoCommunityConfig};

    fn tiny() -> (GraphData<f64>, Config) {
        let g = two_community::<f64>(&TwoCommunityConfig {
            n: 40,
            d: 4,
            p_in: 0.3,
            p_out: 0.03,
            seed: 1,
            ..TwoCommunityConfig::default()
        })
        .unwrap();
        let mut cfg = Config::default();
        cfg.attr.hidden = 8;
        cfg.attr.attn_hidden = 4;
        cfg.attr.scales = 2;
        cfg.structure.hidden = 8;
        cfg.structure.k = 3;
        cfg.mix.hidden = 8;
        cfg.train.pretrain_epochs = 5;
        cfg.train.attr_epochs = 5;
        cfg.train.struct_epochs = 5;
        cfg.train.mix_epochs = 5;
        (GraphData::new(g, 0.5).unwrap(), cfg)
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[1]));
        assert_ne!(derive_seed(1, &[2]), derive_seed(2, &[2]));
        assert_eq!(derive_seed(5, &[3, 4]), derive_seed(5, &[3, 4]));
    }

    #[test]
    fn teachers_are_untouched() {
        let (data, cfg) = tiny();
        let mut m = TrainedModels::<f64>::init(4, &cfg).unwrap();
        m.structure.set_frozen(true);
        let before = m.structure.checksum();
        train_phase(2, &mut m.attr, &[&m.structure], &data, &cfg.distill, 5, 0.01, 0).unwrap();
        assert_eq!(m.structure.checksum(), before);
    }

    #[test]
    fn zero_eta2_matches_teacherless_training() {
        let (data, cfg) = tiny();
        let dist = DistillConfig { eta2: 0.0, ..cfg.distill.clone() };
        let m = TrainedModels::<f64>::init(4, &cfg).unwrap();
        let (mut a, mut b) = (m.attr.clone(), m.attr.clone());
        let ra = train_phase(2, &mut a, &[&m.structure], &data, &dist, 4, 0.01, 7).unwrap();
        let rb = train_phase(2, &mut b, &[], &data, &dist, 4, 0.01, 7).unwrap();
        assert_eq!(ra.losses, rb.losses);
        assert_eq!(a.checksum(), b.checksum());
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let (data, mut cfg) = tiny();
        cfg.structure.hidden = 6;
        let mut m = TrainedModels::<f64>::init(4, &cfg).unwrap();
        let r = train_phase(2, &mut m.attr, &[&m.structure], &data, &cfg.distill, 1, 0.01, 0);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn divergence_reports_phase() {
        let (data, cfg) = tiny();
        let mut m = TrainedModels::<f64>::init(4, &cfg).unwrap();
        m.mix.a.value.fill(f64::NAN);
        let r = train_phase(4, &mut m.mix, &[], &data, &cfg.distill, 2, 0.01, 0);
        assert!(matches!(r, Err(Error::Diverged { phase: 4, epoch: 0 }) | Err(Error::Value(_))));
    }

    #[test]
    fn orchestrate_round_trips_checkpoints() {
        let (data, cfg) = tiny();
        let dir = tempfile::tempdir().unwrap();
        let (m, man) = orchestrate(&data, &cfg, Some(dir.path())).unwrap();
        assert_eq!(man.phases.len(), 4);
        assert_eq!(man.phases[3].teachers, vec![ChannelKind::Attr, ChannelKind::Struct]);
        for name in CHECKPOINT_NAMES {
            assert!(dir.path().join(name).exists());
        }
        let (loaded, man2) = load_models::<f64>(dir.path()).unwrap();
        assert_eq!(man, man2);
        for (a, b) in m.channels().iter().zip(loaded.channels()) {
            assert_eq!(a.score(&data).unwrap(), b.score(&data).unwrap());
        }
        let (again, _) = orchestrate(&data, &cfg, None).unwrap();
        assert_eq!(again.checksum(), m.checksum());
    }

    #[test]
    fn unified_shares_the_encoder() {
        let (data, mut cfg) = tiny();
        cfg.train.unified = true;
        let dir = tempfile::tempdir().unwrap();
        let (m, man) = orchestrate(&data, &cfg, Some(dir.path())).unwrap();
        assert!(man.unified);
        assert_eq!(m.attr.w1.value, m.structure.w3.value);
        assert_eq!(m.attr.w1.value, m.mix.weights[0].value);
        let (loaded, _) = load_models::<f64>(dir.path()).unwrap();
        assert_eq!(loaded.checksum(), m.checksum());
    }
}
