#![allow(dead_code)]

use biolearn::credit::{bp_backward, cross_entropy, layer_gradients, loss_grad_softmax_ce, one_hot};
use biolearn::network::Network;
use biolearn::numerics::{Rng, Tensor};
use biolearn::Real;

pub fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = Rng::new(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.normal()).collect()).unwrap()
}

/// `|g − ĝ| / max(1, |g|, |ĝ|)`
pub fn rel_err(a: Real, b: Real) -> Real {
    (a - b).abs() / (1.0 as Real).max(a.abs()).max(b.abs())
}

pub fn max_rel_err(a: &Tensor, b: &Tensor) -> Real {
    assert_eq!(a.shape(), b.shape());
    a.data().iter().zip(b.data()).map(|(&x, &y)| rel_err(x, y)).fold(0.0, Real::max)
}

/// Central difference of `f` at every entry of `x`.
pub fn numeric_grad(x: &Tensor, h: Real, mut f: impl FnMut(&Tensor) -> Real) -> Tensor {
    let mut probe = x.clone();
    let mut out = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe);
        probe.data_mut()[i] = orig - h;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        out.data_mut()[i] = (up - down) / (2.0 * h);
    }
    out
}

/// Softmax cross-entropy of the network's scores for `label`.
pub fn network_loss(net: &Network, input: &Tensor, label: usize) -> Real {
    let (scores, _) = net.forward(input).unwrap();
    cross_entropy(&scores, &one_hot(label, scores.len())).unwrap()
}

/// Angle between two vectors in radians, via the stable half-angle form
/// `2·atan2(‖â − b̂‖, ‖â + b̂‖)`.
pub fn angle(a: &[Real], b: &[Real]) -> Real {
    let na = a.iter().map(|x| x * x).sum::<Real>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<Real>().sqrt();
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        diff += (x / na - y / nb).powi(2);
        sum += (x / na + y / nb).powi(2);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Largest relative error between backprop parameter gradients and central
/// differences of the cross-entropy loss, over every weight and bias.
pub fn bp_gradient_error(net: &Network, input: &Tensor, label: usize) -> Real {
    let (scores, cache) = net.forward(input).unwrap();
    let e = loss_grad_softmax_ce(&scores, &one_hot(label, scores.len())).unwrap();
    let signal = bp_backward(net, &cache, &e).unwrap();
    let grads = layer_gradients(net, &cache, &signal).unwrap();
    let mut worst: Real = 0.0;
    for i in net.param_layers() {
        let (gw, gb) = grads[i].as_ref().unwrap();
        let p = net.layer(i).unwrap().clone();
        let nw = numeric_grad(&p.weights, 1e-6, |w| {
            let mut probe = net.clone();
            probe.layer_mut(i).unwrap().weights = w.clone();
            network_loss(&probe, input, label)
        });
        let nb = numeric_grad(&p.bias, 1e-6, |b| {
            let mut probe = net.clone();
            probe.layer_mut(i).unwrap().bias = b.clone();
            network_loss(&probe, input, label)
        });
        worst = worst.max(max_rel_err(gw, &nw)).max(max_rel_err(gb, &nb));
    }
    worst
}
