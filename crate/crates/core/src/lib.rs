//! Small convolutional networks trained from scratch with interchangeable
//! credit-assignment rules: backpropagation, feedback alignment, direct
//! feedback alignment, and Hebbian learning (vanilla and instar with
//! triangle k-WTA competition, read out by a ridge classifier).
//!
//! - [`numerics`]: tensors, seeded random streams, conv/pool/affine kernels, ZCA
//! - [`network`]: topology, initialization, cached forward pass, sparsity masks, checkpoints
//! - [`credit`]: error signals, local updates, Hebbian trainer, ridge readout
//! - [`bench`]: datasets, noise, training loop, multi-seed aggregation, result files
//!
//! The guide in `book/` walks through each piece; its code blocks are
//! compiled and run as doc-tests of this crate.

pub mod bench;
pub mod credit;
mod error;
pub mod network;
pub mod numerics;

pub use error::{Error, Result};

/// Scalar type for every tensor. `f64` unless the `f32` feature is enabled.
#[cfg(not(feature = "f32"))]
pub type Real = f64;
#[cfg(feature = "f32")]
pub type Real = f32;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/credit.md")]
    mod credit {}
    #[doc = include_str!("../../../book/src/hebbian.md")]
    mod hebbian {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
