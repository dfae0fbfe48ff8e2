//! Dense feed-forward networks with explicit backward passes and Adam.
//!
//! Only plain MLPs are needed (ReLU hidden layers, linear or tanh output), so
//! gradients are derived by hand instead of through an autodiff graph. All
//! arithmetic is `f64` and single-threaded, which keeps every pass
//! bit-reproducible.

mod adam;
pub mod checkpoint;
mod dense;
mod matrix;

pub use adam::{adam_step, adam_step_scalar, AdamConfig, AdamState, ScalarAdamState};
pub use checkpoint::{load_params, save_params};
pub use dense::{
    backward, forward, init_params, predict, DenseLayer, DenseParams, ForwardCache, Gradients, OutputActivation,
};
pub use matrix::Matrix;
