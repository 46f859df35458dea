//! Differentiable building blocks for the three reconstruction channels.
//!
//! There is no general autodiff tape: every layer exposes a forward function
//! returning whatever it needs for its backward pass, and the channels chain
//! the backward calls explicitly. [`grad_check`] verifies those hand-written
//! chains against central finite differences.

mod activation;
mod checkpoint;
mod gradcheck;
mod init;
mod layers;
mod loss;
mod optim;
mod param;

pub(crate) use activation::sigmoid_scalar;
pub use activation::{relu, sigmoid, softmax_rows, softmax_rows_backward, tanh, Activation};
pub use checkpoint::{Checkpoint, CheckpointEntry};
pub use gradcheck::{grad_check, CorruptedGradient, Differentiable, GradCheckReport};
pub use init::{glorot_uniform, init_params};
pub use layers::{gcn_backward, gcn_forward, linear_backward, linear_forward, GcnCache};
pub use loss::{frobenius_loss, masked_row_loss};
pub use optim::{Adam, AdamConfig};
pub use param::{Param, Parameterized};
