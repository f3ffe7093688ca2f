//! Error signals for backprop, feedback alignment and direct feedback alignment.
//!
//! All three share one recursion; they differ only in which matrix carries
//! the error across a weighted layer (the forward weights, a fixed random
//! matrix, or a direct projection of the final error).

use crate::credit::feedback::{FeedbackMatrices, FeedbackMode};
use crate::error::{Error, Result};
use crate::network::{ForwardCache, LayerCache, Network};
use crate::numerics::{
    activation_deriv, conv2d_input_error, conv2d_param_grads, matvec, maxpool2d_backward, outer, transpose_matvec,
    Tensor,
};

/// Per-layer errors `e_i` (shaped like the pre-activations) plus the final error.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSignal {
    /// `None` for layers that receive no error (pool layers under DFA).
    pub errors: Vec<Option<Tensor>>,
    pub final_error: Tensor,
}

/// Error with respect to layer `i`'s input, carried by `feedback` when given.
fn propagate_down(
    net: &Network,
    cache: &ForwardCache,
    i: usize,
    error: &Tensor,
    feedback: Option<&Tensor>,
) -> Result<Tensor> {
    let input_shape = cache.layer_input(i).shape().to_vec();
    let down = match &cache.layers[i] {
        LayerCache::Conv(c) => {
            let kernels = feedback.unwrap_or(&net.layer(i).expect("conv params").weights);
            conv2d_input_error(c, kernels, error)?
        }
        LayerCache::Pool(c) => maxpool2d_backward(c, error)?,
        LayerCache::Dense => match feedback {
            None => transpose_matvec(&net.layer(i).expect("dense params").weights, error)?,
            Some(b) => matvec(b, error)?,
        },
    };
    down.reshape(&input_shape)
}

fn check_cache(net: &Network, cache: &ForwardCache, final_error: &Tensor) -> Result<()> {
    if cache.pre.len() != net.depth() || cache.layers.len() != net.depth() {
        return Err(Error::Dimension(format!(
            "cache holds {} layers, network has {}",
            cache.pre.len(),
            net.depth()
        )));
    }
    let out = cache.pre.last().expect("non-empty");
    if out.shape() != final_error.shape() {
        return Err(Error::shapes("final error vs output", final_error.shape(), out.shape()));
    }
    Ok(())
}

fn chain(net: &Network, cache: &ForwardCache, final_error: &Tensor, feedback: Option<&FeedbackMatrices>) -> Result<ErrorSignal> {
    check_cache(net, cache, final_error)?;
    let depth = net.depth();
    let mut errors = vec![None; depth];
    errors[depth - 1] = Some(final_error.clone());
    for i in (0..depth - 1).rev() {
        let above = errors[i + 1].as_ref().expect("filled");
        let b = feedback.and_then(|f| f.get(i + 1));
        let down = propagate_down(net, cache, i + 1, above, b)?;
        let d = activation_deriv(net.specs[i].activation, &cache.pre[i]);
        errors[i] = Some(down.hadamard(&d)?);
    }
    Ok(ErrorSignal {
        errors,
        final_error: final_error.clone(),
    })
}

/// Exact gradients by the chain rule: `e_i = (w_{i+1}ᵀ e_{i+1}) ⊙ σ'(a_i)`.
pub fn bp_backward(net: &Network, cache: &ForwardCache, final_error: &Tensor) -> Result<ErrorSignal> {
    chain(net, cache, final_error, None)
}

/// `e_i = (B_{i+1} e_{i+1}) ⊙ σ'(a_i)`, recursing down from the final error.
pub fn fa_backward(
    net: &Network,
    feedback: &FeedbackMatrices,
    cache: &ForwardCache,
    final_error: &Tensor,
) -> Result<ErrorSignal> {
    if feedback.mode() != FeedbackMode::Fa {
        return Err(Error::Config("fa_backward needs FA feedback matrices".into()));
    }
    feedback.validate(net)?;
    chain(net, cache, final_error, Some(feedback))
}

/// `e_i = (B_i e_f) ⊙ σ'(a_i)` for every weighted hidden layer; the last layer
/// uses `e_f` itself. Nothing recurses through intermediate errors.
pub fn dfa_backward(
    net: &Network,
    feedback: &FeedbackMatrices,
    cache: &ForwardCache,
    final_error: &Tensor,
) -> Result<ErrorSignal> {
    if feedback.mode() != FeedbackMode::Dfa {
        return Err(Error::Config("dfa_backward needs DFA feedback matrices".into()));
    }
    feedback.validate(net)?;
    check_cache(net, cache, final_error)?;
    let depth = net.depth();
    let mut errors = vec![None; depth];
    errors[depth - 1] = Some(final_error.clone());
    for i in 0..depth - 1 {
        if let Some(b) = feedback.get(i) {
            let projected = matvec(b, final_error)?.reshape(cache.pre[i].shape())?;
            let d = activation_deriv(net.specs[i].activation, &cache.pre[i]);
            errors[i] = Some(projected.hadamard(&d)?);
        }
    }
    Ok(ErrorSignal {
        errors,
        final_error: final_error.clone(),
    })
}

/// Loss gradients `(∂w, ∂b)` for every weighted layer that received an error:
/// `e_i z_{i−1}ᵀ` for dense layers, the matching correlation for conv layers.
pub fn layer_gradients(net: &Network, cache: &ForwardCache, signal: &ErrorSignal) -> Result<Vec<Option<(Tensor, Tensor)>>> {
    (0..net.depth())
        .map(|i| {
            let (Some(_), Some(e)) = (net.layer(i), signal.errors[i].as_ref()) else {
                return Ok(None);
            };
            match &cache.layers[i] {
                LayerCache::Conv(c) => conv2d_param_grads(c, e).map(Some),
                LayerCache::Dense => Ok(Some((outer(e, cache.layer_input(i)), e.clone()))),
                LayerCache::Pool(_) => Ok(None),
            }
        })
        .collect()
}
