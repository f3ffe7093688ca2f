//! Greedy, layer-local Hebbian training with triangle k-WTA competition.

use crate::credit::rule::{RuleKind, UpdateRule};
use crate::credit::update::kwta_triangle;
use crate::error::{Error, Result};
use crate::network::{LayerKind, Network};
use crate::numerics::{im2col, ConvGeometry, Tensor};
use crate::Real;

/// Trains weighted layer `layer` on a stream of network inputs; every layer
/// below it is frozen and only computes that layer's input.
///
/// For each sample the layer's pre-activations are computed once. Then, site
/// by site (one site for dense layers), the triangle response of the units is
/// gated to the top `k`, and each winner `j` with response `z_j` moves toward
/// the site's input patch `x`:
///
/// * instar: `w_j ← w_j + η z_j (x − w_j)`
/// * vanilla: `w_j ← w_j + η z_j x`
///
/// Masks, if installed, are re-applied after every sample. Returns the
/// number of samples consumed.
pub fn hebbian_train_layer<I>(net: &mut Network, layer: usize, inputs: I, rule: &UpdateRule) -> Result<usize>
where
    I: IntoIterator,
    I::Item: AsRef<Tensor>,
{
    rule.validate()?;
    if !rule.kind.is_hebbian() {
        return Err(Error::Config(format!("{} is not a Hebbian rule", rule.kind)));
    }
    let spec = *net
        .specs
        .get(layer)
        .ok_or_else(|| Error::Config(format!("no layer {layer}")))?;
    if !spec.kind.has_params() {
        return Err(Error::Config(format!("layer {layer} has no weights to train")));
    }
    let shapes = net.shapes()?;
    let in_shape = shapes[layer].clone();
    let geometry = match spec.kind {
        LayerKind::Conv => Some(ConvGeometry::new([in_shape[0], in_shape[1], in_shape[2]], spec.kernel, spec.stride, spec.padding)?),
        _ => None,
    };
    let units = spec.fan_out;
    if rule.k > units {
        return Err(Error::Config(format!("k-WTA k = {} exceeds {units} units", rule.k)));
    }

    let mut steps = 0;
    for sample in inputs {
        let x = net.forward_to(sample.as_ref(), layer)?;
        // patches: sites × patch_len, row-major
        let (patches, sites, plen) = match &geometry {
            Some(g) => (im2col(&x, g)?.transpose2(), g.sites(), g.patch_len()),
            None => {
                let n = x.len();
                (x.reshape(&[1, n])?, 1, n)
            }
        };
        let params = net.layer_mut(layer).expect("weighted layer");
        let pre = {
            let w = params.weights.data();
            let b = params.bias.data();
            let p = patches.data();
            let mut pre = vec![0.0; sites * units];
            for s in 0..sites {
                let patch = &p[s * plen..(s + 1) * plen];
                for j in 0..units {
                    let row = &w[j * plen..(j + 1) * plen];
                    pre[s * units + j] = row.iter().zip(patch).map(|(a, b)| a * b).sum::<Real>() + b[j];
                }
            }
            pre
        };
        let p = patches.data();
        let w = params.weights.data_mut();
        for s in 0..sites {
            let gate = kwta_triangle(&pre[s * units..(s + 1) * units], rule.k)?;
            let patch = &p[s * plen..(s + 1) * plen];
            for (j, &z) in gate.iter().enumerate() {
                if z <= 0.0 {
                    continue;
                }
                let rate = rule.eta * z;
                let row = &mut w[j * plen..(j + 1) * plen];
                match rule.kind {
                    RuleKind::HebbInstar => row.iter_mut().zip(patch).for_each(|(wi, &xi)| *wi += rate * (xi - *wi)),
                    _ => row.iter_mut().zip(patch).for_each(|(wi, &xi)| *wi += rate * xi),
                }
            }
        }
        params.apply_mask()?;
        if !params.weights.is_finite() {
            return Err(Error::Divergence {
                layer,
                step: Some(steps),
            });
        }
        steps += 1;
    }
    Ok(steps)
}

/// Multiplies every weight of layer `layer` by `factor`.
pub fn apply_weight_decay(net: &mut Network, layer: usize, factor: Real) -> Result<()> {
    let params = net
        .layer_mut(layer)
        .ok_or_else(|| Error::Config(format!("layer {layer} has no weights")))?;
    params.weights.scale(factor);
    Ok(())
}
