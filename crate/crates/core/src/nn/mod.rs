//! Dense numeric core: tensors, multilayer perceptrons, Adam and gradient checks.

mod adam;
mod checkpoint;
mod gradcheck;
mod mlp;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState, Direction};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest, LayerManifest};
pub use gradcheck::{grad_check, grad_check_flat};
pub use mlp::{Activation, ForwardCache, Gradients, Layer, LayerGrads, MlpParams};
pub use tensor::Tensor;
