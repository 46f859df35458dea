//! Triplet mutual distillation and the phased training schedule.

mod trainer;
mod triplet;

pub use trainer::{
    derive_seed, load_models, orchestrate, train_phase, train_unified, PhaseReport, RunManifest, TrainedModels,
    CHECKPOINT_NAMES, MANIFEST_NAME, UNIFIED_CHECKPOINT,
};
pub use triplet::{sample_triplets, triplet_distill, triplet_loss, Triplet};
