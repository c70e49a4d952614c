//! Dense `f64` tensors with tape-free reverse-mode differentiation.
//!
//! A [`Tensor`] remembers the op that produced it and its inputs whenever
//! any input requires a gradient; [`Tensor::backward`] walks that record in
//! reverse. Parameters live in a [`ParamStore`] and are bound to fresh leaf
//! tensors for each forward pass, so a graph never outlives its step.

mod error;
mod gemm;
mod ops;
mod shape;
mod tensor;

pub mod checkpoint;
pub mod gradcheck;
pub mod loss;
pub mod optim;
pub mod params;
pub mod rng;

pub use error::{Result, TensorError};
pub use loss::{cross_entropy, dot, kl_diag_gaussian, mse};
pub use optim::{
    adam_step, transformer_lr_schedule, vae_lr_schedule, AdamState, InverseSqrtWarmup, StepDecay,
};
pub use params::{Bound, Param, ParamId, ParamStore};
pub use rng::SeededRng;
pub use tensor::Tensor;
