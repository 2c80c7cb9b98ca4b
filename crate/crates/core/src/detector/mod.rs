//! CNN-LSTM seizure detector.

pub mod adam;
pub mod checkpoint;
mod layers;
pub mod network;
pub mod spec;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use network::{EpochPosteriors, Gradients, Tensor, Weights};
pub use spec::{shape_plan, Adaptation, LayerPlan, NetworkSpec, Padding, ShapePlan};
pub use train::{dataset_loss, train, TrainConfig, TrainExample, TrainOutcome};
