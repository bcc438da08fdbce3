//! The multi-label classifier and its training loop.

mod checkpoint;
mod loss;
mod mlp;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use loss::{focal_logit_gradient, weighted_focal_loss, FocalLossSpec, DEFAULT_GAMMA, PROB_CLAMP};
pub use mlp::{Dense, Gradients, MlpModel, DEFAULT_DROPOUT, DEFAULT_HIDDEN};
pub use train::{train_task, TrainConfig};
