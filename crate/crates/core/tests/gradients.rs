//! Backward passes checked against central finite differences.

// Finite differences need f64.
#![cfg(not(feature = "f32"))]

mod common;

use biolearn::network::{build_network, HeadKind, LayerSpec};
use biolearn::numerics::{
    affine, conv2d_backward, conv2d_forward, im2col, maxpool2d, maxpool2d_backward, outer, transpose_matvec,
    ActivationKind, ConvGeometry, Tensor,
};
use biolearn::Real;
use common::{bp_gradient_error, max_rel_err, numeric_grad, random_tensor};
use proptest::prelude::*;

const H: Real = 1e-6;

fn weighted_sum(t: &Tensor, r: &Tensor) -> Real {
    t.dot(r)
}

#[test]
fn conv_backward_matches_finite_differences() {
    let x = random_tensor(&[2, 4, 4], 1);
    let k = random_tensor(&[3, 2, 3, 3], 2);
    let b = random_tensor(&[3], 3);
    let (out, cache) = conv2d_forward(&x, &k, &b, 1, 1).unwrap();
    let r = random_tensor(out.shape(), 4);
    let grads = conv2d_backward(&cache, &k, &r).unwrap();

    let loss = |x: &Tensor, k: &Tensor, b: &Tensor| weighted_sum(&conv2d_forward(x, k, b, 1, 1).unwrap().0, &r);
    let gx = numeric_grad(&x, H, |x| loss(x, &k, &b));
    let gk = numeric_grad(&k, H, |k| loss(&x, k, &b));
    let gb = numeric_grad(&b, H, |b| loss(&x, &k, b));
    assert!(max_rel_err(&grads.input_error, &gx) < 1e-5);
    assert!(max_rel_err(&grads.kernel_grad, &gk) < 1e-5);
    assert!(max_rel_err(&grads.bias_grad, &gb) < 1e-5);
}

#[test]
fn strided_conv_backward_matches_finite_differences() {
    let x = random_tensor(&[1, 5, 5], 5);
    let k = random_tensor(&[2, 1, 2, 2], 6);
    let b = random_tensor(&[2], 7);
    let (out, cache) = conv2d_forward(&x, &k, &b, 2, 0).unwrap();
    let r = random_tensor(out.shape(), 8);
    let grads = conv2d_backward(&cache, &k, &r).unwrap();
    let gx = numeric_grad(&x, H, |x| weighted_sum(&conv2d_forward(x, &k, &b, 2, 0).unwrap().0, &r));
    let gk = numeric_grad(&k, H, |k| weighted_sum(&conv2d_forward(&x, k, &b, 2, 0).unwrap().0, &r));
    assert!(max_rel_err(&grads.input_error, &gx) < 1e-5);
    assert!(max_rel_err(&grads.kernel_grad, &gk) < 1e-5);
}

#[test]
fn affine_backward_matches_finite_differences() {
    let w = random_tensor(&[4, 6], 11);
    let x = random_tensor(&[6], 12);
    let b = random_tensor(&[4], 13);
    let r = random_tensor(&[4], 14);
    let gx = numeric_grad(&x, H, |x| weighted_sum(&affine(&w, x, &b).unwrap(), &r));
    let gw = numeric_grad(&w, H, |w| weighted_sum(&affine(w, &x, &b).unwrap(), &r));
    let gb = numeric_grad(&b, H, |b| weighted_sum(&affine(&w, &x, b).unwrap(), &r));
    assert!(max_rel_err(&transpose_matvec(&w, &r).unwrap(), &gx) < 1e-5);
    assert!(max_rel_err(&outer(&r, &x), &gw) < 1e-5);
    assert!(max_rel_err(&r, &gb) < 1e-5);
}

#[test]
fn bp_matches_finite_differences_on_dense_net() {
    let specs = vec![
        LayerSpec::dense(5, ActivationKind::Tanh),
        LayerSpec::dense(4, ActivationKind::Tanh),
        LayerSpec::dense(3, ActivationKind::Identity),
    ];
    let net = build_network(&[6], specs, HeadKind::Linear, 21).unwrap();
    let x = random_tensor(&[6], 22);
    assert!(bp_gradient_error(&net, &x, 1) < 1e-5);
}

#[test]
fn bp_matches_finite_differences_through_conv_and_pool() {
    let specs = vec![
        LayerSpec::conv(3, 3, ActivationKind::Tanh),
        LayerSpec::pool(2, 2),
        LayerSpec::conv(4, 3, ActivationKind::Tanh),
        LayerSpec::dense(3, ActivationKind::Identity),
    ];
    let net = build_network(&[2, 6, 6], specs, HeadKind::Linear, 31).unwrap();
    let x = random_tensor(&[2, 6, 6], 32);
    assert!(bp_gradient_error(&net, &x, 2) < 1e-4);
}

fn conv_case() -> impl Strategy<Value = (usize, usize, usize, usize, usize, usize, usize, u64)> {
    // channels, height, width, kernel, stride, padding, filters, seed
    (1usize..=3, 1usize..=3, 0usize..=1, 1usize..=2, 1usize..=3, 0usize..=3, 0usize..=3, any::<u64>()).prop_map(
        |(c, k, pad, stride, f, dh, dw, seed)| (c, k + dh, k + dw, k, stride, pad, f, seed),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn conv_equals_affine_over_unrolled_patches((c, h, w, k, stride, pad, f, seed) in conv_case()) {
        let x = random_tensor(&[c, h, w], seed);
        let kernels = random_tensor(&[f, c, k, k], seed ^ 1);
        let bias = random_tensor(&[f], seed ^ 2);
        let (out, _) = conv2d_forward(&x, &kernels, &bias, stride, pad).unwrap();
        let g = ConvGeometry::new([c, h, w], k, stride, pad).unwrap();
        let cols = im2col(&x, &g).unwrap().transpose2();
        let flat = kernels.clone().reshape(&[f, g.patch_len()]).unwrap();
        prop_assert_eq!(out.shape(), &[f, g.out_height, g.out_width][..]);
        for s in 0..g.sites() {
            let patch = Tensor::from_vec(cols.data()[s * g.patch_len()..(s + 1) * g.patch_len()].to_vec());
            let expected = affine(&flat, &patch, &bias).unwrap();
            for j in 0..f {
                let got = out.data()[j * g.sites() + s];
                prop_assert!((got - expected.data()[j]).abs() <= 1e-12 * (1.0 + got.abs()));
            }
        }
    }

    #[test]
    fn partitioning_pool_conserves_error(c in 1usize..=3, cells in 1usize..=3, window in 1usize..=3, seed in any::<u64>()) {
        let side = cells * window;
        let x = random_tensor(&[c, side, side], seed);
        let (out, cache) = maxpool2d(&x, window, window).unwrap();
        let e = random_tensor(out.shape(), seed ^ 7);
        let back = maxpool2d_backward(&cache, &e).unwrap();
        prop_assert!((back.sum() - e.sum()).abs() < 1e-12);
        prop_assert_eq!(back.data().iter().filter(|&&v| v != 0.0).count(), e.data().iter().filter(|&&v| v != 0.0).count());
    }
}
