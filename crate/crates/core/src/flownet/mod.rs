//! The memory-based residual flow-map network and its training.

mod adam;
mod checkpoint;
mod loss;
mod model;
mod train;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{CheckpointHeader, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use loss::{loss_gradient, recurrent_loss, recurrent_rollout};
pub use model::{FlowMapModel, ModelMeta, Tape, INPUT_ORDERING};
pub use train::{train, train_with_progress, TrainConfig, TrainOutcome};
