//! Small double-precision network engine: dense and token-shared dense
//! layers, residual gated self-attention, softmax/cross-entropy, Adam and
//! categorical sampling.

mod adam;
pub mod checkpoint;
mod distribution;
mod loss;
mod matrix;
mod network;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_params, params_from_str, params_to_string, save_params};
pub use distribution::{argmax, sample_categorical, sample_weighted, softmax, ActionDistribution};
pub use loss::{cross_entropy_grad, cross_entropy_with_accuracy};
pub use matrix::Matrix;
pub use network::{Activation, AttentionBlock, Layer, ParamSet, Trace};
