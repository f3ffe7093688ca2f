use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{HeadKind, LayerKind, Network};
use crate::numerics::{streams, Rng, Tensor};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeedbackMode {
    /// Layer-by-layer: `B_j` replaces the transpose of layer `j`'s weights when
    /// passing `e_j` down to layer `j − 1`.
    Fa,
    /// Direct: `B_i` maps the final error straight onto layer `i`'s pre-activation.
    Dfa,
}

/// The fixed random matrices carrying errors backward.
///
/// `matrices[j]` is indexed by layer. In [`FeedbackMode::Fa`] it is present
/// for every weighted layer that has a weighted layer below it: a dense layer
/// with weights `m×n` gets an `n×m` matrix, a conv layer gets a tensor shaped
/// like its kernels (used as the kernels of the transposed convolution). In
/// [`FeedbackMode::Dfa`] it is present for every weighted layer except the
/// last, shaped `len(a_i) × classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackMatrices {
    mode: FeedbackMode,
    matrices: Vec<Option<Tensor>>,
}

fn lowest_param_layer(net: &Network) -> Option<usize> {
    net.param_layers().first().copied()
}

/// Expected feedback shape for layer `j`, or `None` when no matrix belongs there.
fn expected_shape(net: &Network, shapes: &[Vec<usize>], mode: FeedbackMode, j: usize) -> Option<Vec<usize>> {
    let params = net.layer(j)?;
    let last = net.depth() - 1;
    match mode {
        FeedbackMode::Fa => {
            if Some(j) == lowest_param_layer(net) {
                return None;
            }
            let w = params.weights.shape();
            match net.specs[j].kind {
                LayerKind::Dense => Some(vec![w[1], w[0]]),
                _ => Some(w.to_vec()),
            }
        }
        FeedbackMode::Dfa => {
            if j == last {
                return None;
            }
            let classes: usize = shapes[last + 1].iter().product();
            Some(vec![shapes[j + 1].iter().product(), classes])
        }
    }
}

impl FeedbackMatrices {
    /// Draws every matrix from `N(0, 1/√fan)` on the seed's feedback stream,
    /// where `fan` is the number of error components summed into each output.
    pub fn random(net: &Network, mode: FeedbackMode, seed: u64) -> Result<Self> {
        if net.head != HeadKind::Linear {
            return Err(Error::Config("feedback alignment needs a linear head".into()));
        }
        let shapes = net.shapes()?;
        let mut rng = Rng::new(seed).split(streams::FEEDBACK);
        let matrices = (0..net.depth())
            .map(|j| {
                expected_shape(net, &shapes, mode, j).map(|shape| {
                    let fan = match (mode, net.specs[j].kind) {
                        (FeedbackMode::Fa, LayerKind::Conv) => shape[0] * shape[2] * shape[3],
                        _ => shape[1],
                    };
                    let std = 1.0 / (fan as Real).sqrt();
                    let n = shape.iter().product();
                    Tensor::new(shape, (0..n).map(|_| rng.gaussian(0.0, std)).collect()).expect("feedback shape")
                })
            })
            .collect();
        Ok(Self { mode, matrices })
    }

    /// FA matrices equal to the current forward weights (transposed for
    /// dense layers). With these, FA reproduces backprop exactly.
    pub fn mirror_weights(net: &Network) -> Result<Self> {
        let shapes = net.shapes()?;
        let matrices = (0..net.depth())
            .map(|j| {
                expected_shape(net, &shapes, FeedbackMode::Fa, j).map(|_| {
                    let w = &net.layer(j).expect("weighted layer").weights;
                    match net.specs[j].kind {
                        LayerKind::Dense => w.transpose2(),
                        _ => w.clone(),
                    }
                })
            })
            .collect();
        Ok(Self {
            mode: FeedbackMode::Fa,
            matrices,
        })
    }

    /// Assembles matrices directly; shapes are checked by [`Self::validate`].
    pub fn from_parts(mode: FeedbackMode, matrices: Vec<Option<Tensor>>) -> Self {
        Self { mode, matrices }
    }

    pub fn mode(&self) -> FeedbackMode {
        self.mode
    }

    pub fn get(&self, layer: usize) -> Option<&Tensor> {
        self.matrices.get(layer).and_then(Option::as_ref)
    }

    pub fn matrices(&self) -> &[Option<Tensor>] {
        &self.matrices
    }

    /// Checks that these matrices were built for `net`'s topology.
    pub fn validate(&self, net: &Network) -> Result<()> {
        let shapes = net.shapes()?;
        if self.matrices.len() != net.depth() {
            return Err(Error::Config(format!(
                "feedback built for {} layers, network has {}",
                self.matrices.len(),
                net.depth()
            )));
        }
        for j in 0..net.depth() {
            let want = expected_shape(net, &shapes, self.mode, j);
            let have = self.matrices[j].as_ref().map(|t| t.shape().to_vec());
            if want != have {
                return Err(Error::Config(format!(
                    "feedback for layer {j} has shape {have:?}, topology needs {want:?}"
                )));
            }
        }
        Ok(())
    }
}
