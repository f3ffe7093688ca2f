//! Deterministic numeric kernel: tensors, random streams, affine/conv/pool
//! primitives, activations and ZCA whitening.

mod activation;
mod conv;
mod rng;
mod tensor;
mod zca;

pub use activation::{activation, activation_deriv, ActivationKind};
pub use conv::{
    affine, col2im, conv2d_backward, conv2d_forward, conv2d_input_error, conv2d_param_grads, im2col, matvec,
    maxpool2d, maxpool2d_backward, outer, transpose_matvec, ConvCache, ConvGeometry, ConvGrads, PoolCache,
};
pub use rng::{streams, Rng};
pub use tensor::Tensor;
pub use zca::{zca_apply, zca_fit, ZcaTransform, DEFAULT_ZCA_EPSILON};

pub(crate) use tensor::argmax;
