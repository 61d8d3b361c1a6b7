//! Dense double-precision kernels with exact adjoints.
//!
//! Every forward op has a matching `*_backward` that maps an upstream adjoint
//! on the op's output to adjoints on each input and parameter. All functions
//! are pure.

pub(crate) mod activation;
mod conv;
mod elementwise;
mod linear;
mod pool;
mod tensor;

pub use activation::{activation, activation_backward, Activation};
pub use conv::{conv2d, conv2d_backward, conv_output_len, ConvGrads, ConvSpec};
pub use elementwise::{add, channel_affine, channel_affine_backward, AffineGrads};
pub use linear::{linear, linear_backward, LinearGrads};
pub use pool::{global_avg_pool, global_avg_pool_backward};
pub use tensor::Tensor4;

use crate::error::{Error, Result};

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Numeric(format!("{what}: element {i} is {}", values[i]))),
        None => Ok(()),
    }
}
