//! Small dense-tensor numerics with hand-written backward passes.
//!
//! Everything is `f64` and row-major. Models own a [`ParamSet`], fill its
//! gradient accumulators in their own backward code, and call
//! [`adam_step`]. [`grad_check`] compares those gradients against central
//! finite differences.

mod gradcheck;
mod ops;
mod params;
mod rng;
pub(crate) mod serialize;
mod tensor;

pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport};
pub(crate) use ops::add_into;
pub use ops::{
    embed_accumulate, embed_lookup, linear, linear_backward, max_pool, mean_pool, softmax,
    softmax_xent, MaxPool,
};
pub use params::{adam_step, glorot_uniform, AdamConfig, Param, ParamSet};
pub use rng::Rng;
pub use serialize::{ModelFile, TensorRecord, MODEL_FORMAT_VERSION};
pub use tensor::Tensor;
