//! Masked multi-task losses, class weighting, SGD and augmentation, plus a
//! small synthetic-image training loop used to exercise the full backward
//! path.

mod augment;
mod labels;
mod loss;
mod sgd;
mod toy;

pub use augment::{augment, augment_with, flip_horizontal, warp, AugmentConfig, AugmentParams};
pub use labels::{class_weights, inverse_frequency_weights, ClassWeights, LabelHistogram, TaskLabels};
pub use loss::{
    batch_objective, multitask_loss, task_loss, weighted_binary_cross_entropy,
    weighted_cross_entropy, BatchObjective,
};
pub use sgd::{sgd_step, TrainConfig};
pub use toy::{synthetic_images, toy_graph, train_toy, EpochRecord, ToyConfig, ToySample, ToyTrainingReport};
