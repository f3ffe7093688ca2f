//! Error pathways, local rules and the ridge readout.

mod common;

use biolearn::credit::{
    bp_backward, dfa_backward, fa_backward, hebbian_train_layer, hebbian_vanilla_update, instar_update,
    layer_gradients, loss_grad_softmax_ce, one_hot, ridge_fit, FeedbackMatrices, FeedbackMode, RuleKind, UpdateRule,
};
use biolearn::network::{build_network, HeadKind, LayerSpec, Network};
use biolearn::numerics::{activation_deriv, ActivationKind, Rng, Tensor};
use biolearn::Real;
use common::{angle, random_tensor};
use proptest::prelude::*;

fn dense_net(widths: &[usize], hidden: ActivationKind, seed: u64) -> Network {
    let last = widths.len() - 2;
    let specs = widths[1..]
        .iter()
        .enumerate()
        .map(|(i, &n)| LayerSpec::dense(n, if i == last { ActivationKind::Identity } else { hidden }))
        .collect();
    build_network(&[widths[0]], specs, HeadKind::Linear, seed).unwrap()
}

fn conv_net(seed: u64) -> Network {
    let specs = vec![
        LayerSpec::conv(3, 3, ActivationKind::Relu),
        LayerSpec::pool(2, 2),
        LayerSpec::conv(4, 3, ActivationKind::Relu),
        LayerSpec::pool(2, 2),
        LayerSpec::dense(5, ActivationKind::Relu),
        LayerSpec::dense(3, ActivationKind::Identity),
    ];
    build_network(&[3, 8, 8], specs, HeadKind::Linear, seed).unwrap()
}

fn final_error(net: &Network, x: &Tensor, label: usize) -> (Tensor, biolearn::network::ForwardCache) {
    let (scores, cache) = net.forward(x).unwrap();
    (loss_grad_softmax_ce(&scores, &one_hot(label, scores.len())).unwrap(), cache)
}

#[test]
fn fa_with_mirrored_weights_is_bitwise_backprop() {
    for (net, x) in [
        (dense_net(&[6, 5, 4, 3], ActivationKind::Tanh, 1), random_tensor(&[6], 2)),
        (conv_net(3), random_tensor(&[3, 8, 8], 4)),
    ] {
        let (e, cache) = final_error(&net, &x, 1);
        let b = FeedbackMatrices::mirror_weights(&net).unwrap();
        let fa = fa_backward(&net, &b, &cache, &e).unwrap();
        let bp = bp_backward(&net, &cache, &e).unwrap();
        assert_eq!(fa, bp);
        assert_eq!(
            layer_gradients(&net, &cache, &fa).unwrap(),
            layer_gradients(&net, &cache, &bp).unwrap()
        );
    }
}

#[test]
fn dfa_with_one_hidden_layer_equals_fa() {
    let net = dense_net(&[5, 4, 3], ActivationKind::Tanh, 5);
    let (e, cache) = final_error(&net, &random_tensor(&[5], 6), 2);
    let b = random_tensor(&[4, 3], 7);
    let fa = FeedbackMatrices::from_parts(FeedbackMode::Fa, vec![None, Some(b.clone())]);
    let dfa = FeedbackMatrices::from_parts(FeedbackMode::Dfa, vec![Some(b), None]);
    assert_eq!(
        fa_backward(&net, &fa, &cache, &e).unwrap(),
        dfa_backward(&net, &dfa, &cache, &e).unwrap()
    );
}

#[test]
fn dfa_hidden_errors_follow_the_direct_formula() {
    let net = dense_net(&[6, 5, 4, 3], ActivationKind::Tanh, 8);
    let (e, cache) = final_error(&net, &random_tensor(&[6], 9), 0);
    let fb = FeedbackMatrices::random(&net, FeedbackMode::Dfa, 10).unwrap();
    let signal = dfa_backward(&net, &fb, &cache, &e).unwrap();
    for layer in 0..2 {
        let b = fb.get(layer).unwrap();
        let (rows, cols) = (b.shape()[0], b.shape()[1]);
        let deriv = activation_deriv(ActivationKind::Tanh, &cache.pre[layer]);
        let expected: Vec<Real> = (0..rows)
            .map(|r| {
                let mut s = 0.0;
                for c in 0..cols {
                    s += b.data()[r * cols + c] * e.data()[c];
                }
                s * deriv.data()[r]
            })
            .collect();
        assert_eq!(signal.errors[layer].as_ref().unwrap().data(), &expected[..]);
    }
    assert_eq!(signal.errors[2].as_ref().unwrap(), &e);
}

#[test]
fn dfa_reaches_conv_layers_and_skips_pools() {
    let net = conv_net(11);
    let (e, cache) = final_error(&net, &random_tensor(&[3, 8, 8], 12), 1);
    let fb = FeedbackMatrices::random(&net, FeedbackMode::Dfa, 13).unwrap();
    let signal = dfa_backward(&net, &fb, &cache, &e).unwrap();
    for (i, err) in signal.errors.iter().enumerate() {
        match net.specs[i].kind {
            biolearn::network::LayerKind::Pool => assert!(err.is_none()),
            _ => assert_eq!(err.as_ref().unwrap().shape(), cache.pre[i].shape()),
        }
    }
}

#[test]
fn fa_hand_evaluated_two_by_two() {
    let mut net = dense_net(&[2, 2, 2], ActivationKind::Relu, 14);
    net.layer_mut(0).unwrap().weights = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let x = Tensor::from_vec(vec![1.0, 2.0]);
    let (_, cache) = net.forward(&x).unwrap();
    let b = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let fb = FeedbackMatrices::from_parts(FeedbackMode::Fa, vec![None, Some(b)]);
    let e_f = Tensor::from_vec(vec![1.0, -1.0]);
    let signal = fa_backward(&net, &fb, &cache, &e_f).unwrap();
    // a_1 = [1, 2] > 0, so e_1 = B e_f = [1 − 2, 3 − 4].
    assert_eq!(signal.errors[0].as_ref().unwrap().data(), &[-1.0, -1.0]);
}

#[test]
fn fa_identity_feedback_passes_final_error_through() {
    let net = dense_net(&[3, 2, 2], ActivationKind::Identity, 15);
    let (e, cache) = final_error(&net, &random_tensor(&[3], 16), 1);
    let fb = FeedbackMatrices::from_parts(FeedbackMode::Fa, vec![None, Some(Tensor::identity(2))]);
    let signal = fa_backward(&net, &fb, &cache, &e).unwrap();
    assert_eq!(signal.errors[0].as_ref().unwrap(), &e);
}

#[test]
fn zero_final_error_gives_zero_dfa_errors() {
    let net = dense_net(&[4, 3, 3, 2], ActivationKind::Tanh, 17);
    let (_, cache) = net.forward(&random_tensor(&[4], 18)).unwrap();
    let fb = FeedbackMatrices::random(&net, FeedbackMode::Dfa, 19).unwrap();
    let signal = dfa_backward(&net, &fb, &cache, &Tensor::zeros(&[2])).unwrap();
    assert!(signal.errors.iter().flatten().all(|e| e.data().iter().all(|&v| v == 0.0)));
}

#[test]
fn bp_single_identity_layer_and_dead_relu() {
    let net = dense_net(&[3, 2], ActivationKind::Identity, 20);
    let (e, cache) = final_error(&net, &random_tensor(&[3], 21), 0);
    assert_eq!(bp_backward(&net, &cache, &e).unwrap().errors[0].as_ref().unwrap(), &e);

    let mut net = dense_net(&[2, 3, 2], ActivationKind::Relu, 22);
    net.layer_mut(0).unwrap().bias = Tensor::full(&[3], -100.0);
    let (e, cache) = final_error(&net, &Tensor::from_vec(vec![0.5, -0.5]), 1);
    let signal = bp_backward(&net, &cache, &e).unwrap();
    assert!(signal.errors[0].as_ref().unwrap().data().iter().all(|&v| v == 0.0));
}

#[test]
fn feedback_for_another_topology_is_rejected() {
    let net = dense_net(&[4, 3, 2], ActivationKind::Tanh, 23);
    let other = dense_net(&[4, 5, 2], ActivationKind::Tanh, 23);
    let fb = FeedbackMatrices::random(&other, FeedbackMode::Fa, 24).unwrap();
    let (e, cache) = final_error(&net, &random_tensor(&[4], 25), 0);
    assert!(matches!(fa_backward(&net, &fb, &cache, &e), Err(biolearn::Error::Config(_))));
}

#[test]
fn feedback_matrices_are_untouched_by_training() {
    let mut net = conv_net(26);
    let fb = FeedbackMatrices::random(&net, FeedbackMode::Fa, 27).unwrap();
    let before = fb.clone();
    for step in 0..3 {
        let (e, cache) = final_error(&net, &random_tensor(&[3, 8, 8], 28 + step), step as usize % 3);
        let signal = fa_backward(&net, &fb, &cache, &e).unwrap();
        let grads = layer_gradients(&net, &cache, &signal).unwrap();
        for (i, g) in grads.into_iter().enumerate() {
            if let Some((gw, gb)) = g {
                let p = net.layer_mut(i).unwrap();
                p.weights.axpy(-0.1, &gw).unwrap();
                p.bias.axpy(-0.1, &gb).unwrap();
            }
        }
    }
    assert_eq!(fb, before);
}

#[test]
fn vanilla_hebbian_grows_without_bound() {
    let x = Tensor::from_vec(vec![0.5, 0.2, 0.8]);
    let mut w = Tensor::from_vec(vec![0.1, 0.1, 0.1]);
    let mut last = w.norm();
    for _ in 0..100 {
        let z = Tensor::from_vec(vec![w.dot(&x)]);
        let dw = hebbian_vanilla_update(&x, &z, 0.1);
        w.axpy(1.0, &dw.reshape(&[3]).unwrap()).unwrap();
        assert!(w.norm() > last);
        last = w.norm();
    }
}

/// Two-unit dense layer with a triangle response, trained by the instar rule.
fn competitive_layer(inputs: usize, seed: u64) -> Network {
    build_network(&[inputs], vec![LayerSpec::dense(2, ActivationKind::Triangle)], HeadKind::Ridge, seed).unwrap()
}

#[test]
fn instar_winner_aligns_with_a_repeated_input() {
    let mut net = competitive_layer(3, 29);
    let x = Tensor::from_vec(vec![0.6, 0.3, 0.7]);
    let winner = net.forward(&x).unwrap().0.argmax();
    let rule = UpdateRule::new(RuleKind::HebbInstar, 0.2);
    let row = |net: &Network| net.layer(0).unwrap().weights.data()[winner * 3..winner * 3 + 3].to_vec();
    let mut last = angle(&row(&net), x.data());
    for _ in 0..500 {
        hebbian_train_layer(&mut net, 0, [&x], &rule).unwrap();
        let now = angle(&row(&net), x.data());
        // Once w equals x to the last bit the angle jitters at rounding level.
        assert!(now <= last + Real::EPSILON);
        last = now;
    }
    assert!(last < 1e-3, "final angle {last}");
}

#[test]
fn zero_rate_leaves_hebbian_layer_unchanged() {
    let mut net = competitive_layer(3, 30);
    let before = net.clone();
    let rule = UpdateRule::new(RuleKind::HebbInstar, 0.0);
    hebbian_train_layer(&mut net, 0, [random_tensor(&[3], 31), random_tensor(&[3], 32)], &rule).unwrap();
    assert_eq!(net, before);
}

#[test]
fn competitive_units_find_two_orthogonal_clusters() {
    let mut rng = Rng::new(33);
    let centers = [[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]];
    let samples: Vec<Tensor> = (0..400)
        .map(|i| {
            let c = centers[i % 2];
            Tensor::from_vec(c.iter().map(|&v| v + 0.05 * rng.normal()).collect())
        })
        .collect();
    let means: Vec<Vec<Real>> = (0..2)
        .map(|k| {
            let mut m = vec![0.0; 4];
            for s in samples.iter().skip(k).step_by(2) {
                for (a, b) in m.iter_mut().zip(s.data()) {
                    *a += b / 200.0;
                }
            }
            m
        })
        .collect();
    // Small positive starting weights, so neither unit starts out of reach
    // of both clusters.
    let mut net = competitive_layer(4, 34);
    let start = net.layer(0).unwrap().weights.map(|w| 0.1 * w.abs());
    net.layer_mut(0).unwrap().weights = start;
    let rule = UpdateRule::new(RuleKind::HebbInstar, 0.05);
    for _ in 0..5 {
        hebbian_train_layer(&mut net, 0, &samples, &rule).unwrap();
    }
    let w = net.layer(0).unwrap().weights.data().to_vec();
    let to_cluster = |unit: usize, k: usize| angle(&w[unit * 4..unit * 4 + 4], &means[k]).to_degrees();
    let straight = to_cluster(0, 0).max(to_cluster(1, 1));
    let crossed = to_cluster(0, 1).max(to_cluster(1, 0));
    assert!(straight.min(crossed) < 5.0, "angles {straight} / {crossed}");
}

// Residual threshold sized for f64.
#[cfg(not(feature = "f32"))]
#[test]
fn ridge_normal_equations_hold() {
    let x = random_tensor(&[50, 8], 35);
    let labels: Vec<usize> = (0..50).map(|i| i % 3).collect();
    let mut y = Vec::new();
    for &l in &labels {
        y.extend_from_slice(one_hot(l, 3).data());
    }
    let y = Tensor::new(vec![50, 3], y).unwrap();
    let lambda = 0.1;
    let clf = ridge_fit(&x, &y, lambda).unwrap();
    // (XᵀX + λI) Wᵀ − XᵀY
    let xt = x.transpose2();
    let wt = clf.weights.transpose2();
    let mut lhs = xt.matmul(&x).unwrap().matmul(&wt).unwrap();
    lhs.axpy(lambda, &wt).unwrap();
    let rhs = xt.matmul(&y).unwrap();
    let mut residual = lhs.clone();
    residual.axpy(-1.0, &rhs).unwrap();
    assert!(residual.norm() / rhs.norm() < 1e-8);
}

#[test]
fn ridge_fit_is_a_minimum() {
    let x = random_tensor(&[40, 6], 36);
    let mut y = Vec::new();
    for i in 0..40 {
        y.extend_from_slice(one_hot(i % 4, 4).data());
    }
    let y = Tensor::new(vec![40, 4], y).unwrap();
    let clf = ridge_fit(&x, &y, 0.5).unwrap();
    let best = clf.objective(&x, &y).unwrap();
    for k in 0..32 {
        let mut delta = random_tensor(&[4, 6], 100 + k);
        delta.scale(1e-3 / delta.norm());
        let mut moved = clf.clone();
        moved.weights.axpy(1.0, &delta).unwrap();
        assert!(moved.objective(&x, &y).unwrap() >= best);
    }
}

proptest! {
    #[test]
    fn instar_never_moves_away_from_the_input(
        pairs in proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..10),
        z in 0.01..=1.0f64,
        eta in 0.01..=1.0f64,
    ) {
        let x = Tensor::from_vec(pairs.iter().map(|p| p.0 as Real).collect());
        let mut w = Tensor::from_vec(pairs.iter().map(|p| p.1 as Real).collect());
        let z = Tensor::from_vec(vec![z as Real]);
        for _ in 0..5 {
            let before = w.max_abs_diff(&x);
            let dist = |w: &Tensor| w.data().iter().zip(x.data()).map(|(a, b)| (a - b).powi(2)).sum::<Real>();
            let d0 = dist(&w);
            let dw = instar_update(&x, &z, &w, eta as Real).unwrap();
            w.axpy(1.0, &dw.reshape(&[x.len()]).unwrap()).unwrap();
            prop_assert!(dist(&w) <= d0);
            prop_assert!(w.max_abs_diff(&x) <= before);
        }
    }
}
