use serde::{Deserialize, Serialize};

use crate::credit::RidgeClassifier;
use crate::error::{Error, Result};
use crate::network::spec::{LayerKind, LayerSpec};
use crate::numerics::{
    activation, affine, conv2d_forward, maxpool2d, streams, ConvCache, PoolCache, Rng, Tensor,
};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    /// The last layer is a dense layer producing class scores.
    Linear,
    /// The network produces features; a fitted [`RidgeClassifier`] reads them out.
    Ridge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Tensor,
    pub bias: Tensor,
    /// Binary mask congruent with `weights`; zero entries are held at zero.
    pub mask: Option<Tensor>,
}

impl LayerParams {
    pub fn apply_mask(&mut self) -> Result<()> {
        if let Some(mask) = &self.mask {
            if mask.shape() != self.weights.shape() {
                return Err(Error::shapes("mask vs weights", mask.shape(), self.weights.shape()));
            }
            for (w, &m) in self.weights.data_mut().iter_mut().zip(mask.data()) {
                if m == 0.0 {
                    *w = 0.0;
                }
            }
        }
        Ok(())
    }

    /// Masks out the `fraction` of weights with the smallest magnitude in
    /// this layer (ties by lower index first) and zeroes them.
    pub fn prune_by_magnitude(&mut self, fraction: Real) -> Result<()> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Config(format!("prune fraction must be in [0, 1), got {fraction}")));
        }
        let n = self.weights.len();
        let count = (fraction * n as Real).round() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        let w = self.weights.data();
        order.sort_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()).then(a.cmp(&b)));
        let mut mask = self.mask.clone().unwrap_or_else(|| Tensor::ones(self.weights.shape()));
        for &i in &order[..count] {
            mask.data_mut()[i] = 0.0;
        }
        self.mask = Some(mask);
        self.apply_mask()
    }
}

#[derive(Debug, Clone)]
pub enum LayerCache {
    Conv(ConvCache),
    Pool(PoolCache),
    Dense,
}

/// Everything a backward rule needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Tensor,
    /// Pre-activations `a_i`, one per layer.
    pub pre: Vec<Tensor>,
    /// Activations `z_i = σ_i(a_i)`, one per layer.
    pub post: Vec<Tensor>,
    pub layers: Vec<LayerCache>,
}

impl ForwardCache {
    /// Input seen by layer `i` (the network input for `i == 0`).
    pub fn layer_input(&self, i: usize) -> &Tensor {
        if i == 0 {
            &self.input
        } else {
            &self.post[i - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub input_shape: Vec<usize>,
    pub specs: Vec<LayerSpec>,
    /// One entry per spec; `None` for pool layers.
    pub params: Vec<Option<LayerParams>>,
    pub head: HeadKind,
    pub readout: Option<RidgeClassifier>,
}

/// Shapes of every layer's input followed by the final output shape.
fn shape_chain(input_shape: &[usize], specs: &[LayerSpec]) -> Result<Vec<Vec<usize>>> {
    let mut shapes = vec![input_shape.to_vec()];
    for (i, spec) in specs.iter().enumerate() {
        let current = shapes.last().expect("non-empty");
        let next = spec.output_shape(current).map_err(|e| {
            let prev = if i == 0 {
                "input".to_string()
            } else {
                format!("layer {} ({:?})", i - 1, specs[i - 1].kind)
            };
            Error::Build(format!(
                "{prev} with output {current:?} does not compose with layer {i} ({:?}): {e}",
                spec.kind
            ))
        })?;
        shapes.push(next);
    }
    Ok(shapes)
}

/// Builds a network with unit gain.
pub fn build_network(input_shape: &[usize], specs: Vec<LayerSpec>, head: HeadKind, seed: u64) -> Result<Network> {
    Network::build(input_shape, specs, head, seed, 1.0)
}

impl Network {
    /// Weights are drawn from `N(0, gain/√fan_in)` on the seed's init stream;
    /// biases start at zero.
    pub fn build(input_shape: &[usize], specs: Vec<LayerSpec>, head: HeadKind, seed: u64, gain: Real) -> Result<Network> {
        if specs.is_empty() {
            return Err(Error::Build("a network needs at least one layer".into()));
        }
        if head == HeadKind::Linear && specs.last().map(|s| s.kind) != Some(LayerKind::Dense) {
            return Err(Error::Build("a linear head needs a dense final layer".into()));
        }
        let shapes = shape_chain(input_shape, &specs)?;
        let mut rng = Rng::new(seed).split(streams::INIT);
        let params = specs
            .iter()
            .zip(&shapes)
            .map(|(spec, in_shape)| {
                spec.weight_shape(in_shape).map(|wshape| {
                    let fan_in: usize = wshape[1..].iter().product();
                    let std = gain / (fan_in as Real).sqrt();
                    let n: usize = wshape.iter().product();
                    let data = (0..n).map(|_| rng.gaussian(0.0, std)).collect();
                    LayerParams {
                        weights: Tensor::new(wshape, data).expect("weight shape"),
                        bias: Tensor::zeros(&[spec.fan_out]),
                        mask: None,
                    }
                })
            })
            .collect();
        Ok(Network {
            input_shape: input_shape.to_vec(),
            specs,
            params,
            head,
            readout: None,
        })
    }

    pub fn depth(&self) -> usize {
        self.specs.len()
    }

    /// Input shape of every layer followed by the output shape.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>> {
        shape_chain(&self.input_shape, &self.specs)
    }

    pub fn output_shape(&self) -> Result<Vec<usize>> {
        Ok(self.shapes()?.pop().expect("non-empty"))
    }

    /// Indices of layers that carry weights.
    pub fn param_layers(&self) -> Vec<usize> {
        (0..self.depth()).filter(|&i| self.params[i].is_some()).collect()
    }

    pub fn layer(&self, i: usize) -> Option<&LayerParams> {
        self.params.get(i).and_then(Option::as_ref)
    }

    pub fn layer_mut(&mut self, i: usize) -> Option<&mut LayerParams> {
        self.params.get_mut(i).and_then(Option::as_mut)
    }

    pub fn weight_count(&self) -> usize {
        self.params.iter().flatten().map(|p| p.weights.len()).sum()
    }

    /// Fraction of exactly-zero weights over all weight tensors.
    pub fn measured_sparsity(&self) -> Real {
        let total = self.weight_count();
        if total == 0 {
            return 0.0;
        }
        let zeros = self
            .params
            .iter()
            .flatten()
            .map(|p| p.weights.data().iter().filter(|&&w| w == 0.0).count())
            .sum::<usize>();
        zeros as Real / total as Real
    }

    /// Installs per-layer masks (as produced by [`make_mask`]) and applies them.
    pub fn install_masks(&mut self, masks: Vec<Option<Tensor>>) -> Result<()> {
        if masks.len() != self.depth() {
            return Err(Error::Dimension(format!(
                "{} masks for {} layers",
                masks.len(),
                self.depth()
            )));
        }
        for (i, mask) in masks.into_iter().enumerate() {
            match (self.params[i].as_mut(), mask) {
                (Some(p), Some(m)) => {
                    if m.shape() != p.weights.shape() {
                        return Err(Error::shapes("mask vs weights", m.shape(), p.weights.shape()));
                    }
                    if m.data().iter().any(|&v| v != 0.0 && v != 1.0) {
                        return Err(Error::Config("mask values must be 0 or 1".into()));
                    }
                    p.mask = Some(m);
                }
                (Some(p), None) => p.mask = None,
                (None, Some(_)) => {
                    return Err(Error::Dimension(format!("layer {i} has no weights to mask")));
                }
                (None, None) => {}
            }
        }
        apply_masks(self)
    }

    /// Forward pass for one sample.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ForwardCache)> {
        if input.shape() != self.input_shape.as_slice() {
            return Err(Error::shapes("network input", &self.input_shape, input.shape()));
        }
        let depth = self.depth();
        let mut pre = Vec::with_capacity(depth);
        let mut post: Vec<Tensor> = Vec::with_capacity(depth);
        let mut layers = Vec::with_capacity(depth);
        for (i, spec) in self.specs.iter().enumerate() {
            let x = if i == 0 { input } else { &post[i - 1] };
            let (a, cache) = match spec.kind {
                LayerKind::Conv => {
                    let p = self.params[i].as_ref().expect("conv params");
                    let (a, c) = conv2d_forward(x, &p.weights, &p.bias, spec.stride, spec.padding)?;
                    (a, LayerCache::Conv(c))
                }
                LayerKind::Pool => {
                    let (a, c) = maxpool2d(x, spec.kernel, spec.stride)?;
                    (a, LayerCache::Pool(c))
                }
                LayerKind::Dense => {
                    let p = self.params[i].as_ref().expect("dense params");
                    (affine(&p.weights, x, &p.bias)?, LayerCache::Dense)
                }
            };
            if !a.is_finite() {
                return Err(Error::Divergence { layer: i, step: None });
            }
            let z = activation(spec.activation, &a);
            if !z.is_finite() {
                return Err(Error::Divergence { layer: i, step: None });
            }
            pre.push(a);
            post.push(z);
            layers.push(cache);
        }
        let output = match self.head {
            HeadKind::Linear => pre[depth - 1].clone(),
            HeadKind::Ridge => {
                let z = &post[depth - 1];
                z.clone().reshape(&[z.len()])?
            }
        };
        Ok((
            output,
            ForwardCache {
                input: input.clone(),
                pre,
                post,
                layers,
            },
        ))
    }

    /// Runs layers `0..layer` and returns the input seen by `layer`.
    pub fn forward_to(&self, input: &Tensor, layer: usize) -> Result<Tensor> {
        if input.shape() != self.input_shape.as_slice() {
            return Err(Error::shapes("network input", &self.input_shape, input.shape()));
        }
        let mut x = input.clone();
        for (i, spec) in self.specs.iter().enumerate().take(layer) {
            let a = match spec.kind {
                LayerKind::Conv => {
                    let p = self.params[i].as_ref().expect("conv params");
                    conv2d_forward(&x, &p.weights, &p.bias, spec.stride, spec.padding)?.0
                }
                LayerKind::Pool => maxpool2d(&x, spec.kernel, spec.stride)?.0,
                LayerKind::Dense => {
                    let p = self.params[i].as_ref().expect("dense params");
                    affine(&p.weights, &x, &p.bias)?
                }
            };
            x = activation(spec.activation, &a);
            if !x.is_finite() {
                return Err(Error::Divergence { layer: i, step: None });
            }
        }
        Ok(x)
    }

    /// Readout features for one sample: the flattened final activation
    /// followed by a constant 1 that carries the readout's intercept.
    pub fn features(&self, input: &Tensor) -> Result<Tensor> {
        let (_, cache) = self.forward(input)?;
        let mut data = cache.post.last().expect("non-empty").data().to_vec();
        data.push(1.0);
        let n = data.len();
        Tensor::new(vec![n], data)
    }

    /// Predicted class for one sample. Ties resolve to the lowest index.
    pub fn predict(&self, input: &Tensor) -> Result<usize> {
        match self.head {
            HeadKind::Linear => Ok(self.forward(input)?.0.argmax()),
            HeadKind::Ridge => {
                let readout = self.readout.as_ref().ok_or_else(|| {
                    Error::Config("ridge head has no fitted readout".into())
                })?;
                readout.predict_one(&self.features(input)?)
            }
        }
    }
}

pub fn forward(net: &Network, input: &Tensor) -> Result<(Tensor, ForwardCache)> {
    net.forward(input)
}

/// Random binary masks zeroing exactly `round(sparsity · total)` weights,
/// chosen uniformly without replacement over the concatenation of every
/// weight tensor.
pub fn make_mask(net: &Network, sparsity: Real, seed: u64) -> Result<Vec<Option<Tensor>>> {
    if !(0.0..1.0).contains(&sparsity) {
        return Err(Error::Config(format!("sparsity must be in [0, 1), got {sparsity}")));
    }
    let total = net.weight_count();
    let zeros = (sparsity * total as Real).round() as usize;
    let mut flat = vec![1.0 as Real; total];
    let mut rng = Rng::new(seed).split(streams::MASK);
    for i in rng.sample_indices(total, zeros) {
        flat[i] = 0.0;
    }
    let mut offset = 0;
    Ok(net
        .params
        .iter()
        .map(|p| {
            p.as_ref().map(|p| {
                let n = p.weights.len();
                let m = Tensor::new(p.weights.shape().to_vec(), flat[offset..offset + n].to_vec()).expect("mask shape");
                offset += n;
                m
            })
        })
        .collect())
}

/// Re-applies every installed mask: `w ← w ⊙ mask`.
pub fn apply_masks(net: &mut Network) -> Result<()> {
    for p in net.params.iter_mut().flatten() {
        p.apply_mask()?;
    }
    Ok(())
}
