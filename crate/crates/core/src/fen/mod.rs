//! Desk-scale residual CNN classifier for the four-class imaging task, its
//! training loop, and penultimate-layer feature extraction.

pub mod layers;
mod model;
mod persist;
mod tensor;
mod train;

pub use model::{FenArchitecture, FenModel, ForwardOutput, Mode, NUM_CLASSES};
pub use persist::MODEL_FORMAT_VERSION;
pub use tensor::Tensor;
pub use train::{accuracy, stratified_split, train, EpochRecord, Optimizer, TrainConfig, TrainReport, MIN_PER_CLASS};
