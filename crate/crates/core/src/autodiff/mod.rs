//! Dense `f64` tensors with reverse-mode automatic differentiation.
//!
//! A [`Tape`] records each operation as it runs. Parameters live in a
//! [`ParamStore`] and enter a computation through [`Tape::param`]; after
//! [`Tape::backward`] the [`Gradients`] map hands back one gradient per
//! parameter, zero for parameters that do not influence the loss.

pub mod gradcheck;
mod kernels;
mod params;
mod tape;
mod tensor;

pub use kernels::Padding;
pub use params::{Param, ParamId, ParamStore};
pub use tape::{BatchNormStats, BnMode, Elementwise, Gradients, Tape, Var};
pub use tensor::Tensor;
