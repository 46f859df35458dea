//! Triple-channel graph anomaly detection.
//!
//! Three autoencoder channels score each node: an attribute channel over
//! multi-scale propagated features, a structure channel reconstructing the
//! adjacency, and a mixture channel reconstructing an attribute-aware
//! curvature matrix. The channels are trained one after another and guide
//! each other through triplet distillation with frozen teachers.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod config;
pub mod curvature;
pub mod distill;
pub mod error;
pub mod eval;
pub mod graph;
pub mod linalg;
pub mod nn;
pub mod scalar;
pub mod verify;

pub use config::Config;
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = linalg::DenseMatrix<f64>;
pub type SparseMatrix = linalg::SparseMatrix<f64>;
pub type Graph = graph::Graph<f64>;
pub type GraphData = channels::GraphData<f64>;
pub type AttrModel = channels::AttrModel<f64>;
pub type StructModel = channels::StructModel<f64>;
pub type MixModel = channels::MixModel<f64>;
pub type TrainedModels = distill::TrainedModels<f64>;
