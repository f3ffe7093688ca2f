//! The training loop: data preparation, per-epoch updates and evaluation.

use std::time::Instant;

use rayon::prelude::*;

use crate::bench::config::TrainingConfig;
use crate::bench::dataset::Dataset;
use crate::bench::record::RunRecord;
use crate::bench::subset::subset;
use crate::credit::{
    apply_weight_decay, bp_backward, dfa_backward, fa_backward, hebbian_train_layer, layer_gradients,
    loss_grad_softmax_ce, one_hot, ridge_fit, FeedbackMatrices, FeedbackMode, RuleKind,
};
use crate::error::{Error, Result};
use crate::network::{apply_masks, make_mask, HeadKind, LayerKind, Network};
use crate::numerics::{streams, zca_fit, Rng, Tensor};
use crate::Real;

/// Samples per parallel work unit when accumulating batch gradients. Partial
/// sums are combined in chunk order, so results do not depend on the thread
/// count.
const GRADIENT_CHUNK: usize = 8;

type Grads = Vec<Option<(Tensor, Tensor)>>;

/// Top-1 accuracy of `net` on `ds`; ties go to the lowest class index.
pub fn evaluate(net: &Network, ds: &Dataset) -> Result<Real> {
    if ds.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty dataset".into()));
    }
    let correct = (0..ds.len())
        .into_par_iter()
        .map(|i| net.predict(&ds.image(i)).map(|p| usize::from(p == ds.labels[i])))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as Real / ds.len() as Real)
}

fn derived_seed(seed: u64, stream: u64) -> u64 {
    Rng::new(seed).split(stream).next_u64()
}

/// Subsets and noises the data as configured, then runs [`train_prepared`].
///
/// A data fraction of 1 keeps the training set as given; noise is applied to
/// both splits with independent streams.
pub fn train(net: &mut Network, config: &TrainingConfig, train_ds: &Dataset, test_ds: &Dataset) -> Result<RunRecord> {
    config.validate()?;
    let seed = config.seed;
    let train_ds = if config.data_fraction < 1.0 {
        subset(train_ds, config.data_fraction, derived_seed(seed, streams::SUBSET), config.stratified)?
    } else {
        train_ds.clone()
    };
    let train_ds = config.noise.apply(&train_ds, derived_seed(seed, streams::NOISE_TRAIN))?;
    let test_ds = config.noise.apply(test_ds, derived_seed(seed, streams::NOISE_TEST))?;
    train_prepared(net, config, &train_ds, &test_ds)
}

fn check_compatible(net: &Network, config: &TrainingConfig, train_ds: &Dataset, test_ds: &Dataset) -> Result<()> {
    let hebbian = config.rule.kind.is_hebbian();
    match (hebbian, net.head) {
        (true, HeadKind::Ridge) | (false, HeadKind::Linear) => {}
        (true, HeadKind::Linear) => return Err(Error::Config("Hebbian rules need a ridge head".into())),
        (false, HeadKind::Ridge) => {
            return Err(Error::Config(format!("{} needs a linear head", config.rule.kind)));
        }
    }
    for ds in [train_ds, test_ds] {
        ds.validate()?;
        if ds.image_shape() != net.input_shape {
            return Err(Error::shapes("dataset images vs network input", &ds.image_shape(), &net.input_shape));
        }
    }
    if train_ds.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if net.head == HeadKind::Linear {
        let out = net.output_shape()?;
        if out != [train_ds.class_count] {
            return Err(Error::shapes("network output vs classes", &out, &[train_ds.class_count]));
        }
    }
    Ok(())
}

fn whiten(config: &TrainingConfig, train_ds: &Dataset, test_ds: &Dataset) -> Result<(Dataset, Dataset)> {
    let Some(eps) = config.zca_epsilon else {
        return Ok((train_ds.clone(), test_ds.clone()));
    };
    let flat = train_ds.images.clone().reshape(&[train_ds.len(), train_ds.image_len()])?;
    let transform = zca_fit(&flat, eps)?;
    let mut train = train_ds.clone();
    let mut test = test_ds.clone();
    train.images = transform.apply(&train.images)?;
    test.images = transform.apply(&test.images)?;
    Ok((train, test))
}

/// Trains on data used exactly as given (apart from optional whitening) and
/// scores the test set every `eval_every` epochs and after the last one.
///
/// Divergence ends the run early; the returned record keeps the epochs that
/// completed and is flagged failed.
pub fn train_prepared(
    net: &mut Network,
    config: &TrainingConfig,
    train_ds: &Dataset,
    test_ds: &Dataset,
) -> Result<RunRecord> {
    config.validate()?;
    check_compatible(net, config, train_ds, test_ds)?;
    let (train_ds, test_ds) = whiten(config, train_ds, test_ds)?;
    if let Some(s) = config.sparsity {
        let masks = make_mask(net, s, config.seed)?;
        net.install_masks(masks)?;
    }
    let feedback = match config.rule.kind {
        RuleKind::Fa => Some(FeedbackMatrices::random(net, FeedbackMode::Fa, config.seed)?),
        RuleKind::Dfa => Some(FeedbackMatrices::random(net, FeedbackMode::Dfa, config.seed)?),
        _ => None,
    };
    let shuffle = Rng::new(config.seed).split(streams::SHUFFLE);
    let mut record = RunRecord::new(config.clone(), Default::default());

    for epoch in 0..config.epochs {
        let started = Instant::now();
        let order = shuffle.split(epoch as u64).permutation(train_ds.len());
        let rate = config.rate(epoch);
        let outcome = if config.rule.kind.is_hebbian() {
            hebbian_epoch(net, config, &train_ds, &order, rate)
        } else {
            gradient_epoch(net, config, feedback.as_ref(), &train_ds, &order, rate)
        };
        let outcome = outcome.and_then(|_| {
            let last = epoch + 1 == config.epochs;
            if (epoch + 1) % config.eval_every == 0 || last {
                evaluate(net, &test_ds).map(Some)
            } else {
                Ok(None)
            }
        });
        match outcome {
            Ok(accuracy) => {
                record.epoch_seconds.push(started.elapsed().as_secs_f64());
                record.sparsity.push(net.measured_sparsity());
                if let Some(a) = accuracy {
                    record.eval_epochs.push(epoch + 1);
                    record.test_accuracy.push(a);
                }
            }
            Err(e @ Error::Divergence { .. }) => {
                record.failed = true;
                record.failure = Some(format!("epoch {}: {e}", epoch + 1));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    record.final_sparsity = net.measured_sparsity();
    Ok(record)
}

fn sample_grads(net: &Network, feedback: Option<&FeedbackMatrices>, input: &Tensor, label: usize) -> Result<Grads> {
    let (scores, cache) = net.forward(input)?;
    let e = loss_grad_softmax_ce(&scores, &one_hot(label, scores.len()))?;
    let signal = match feedback {
        None => bp_backward(net, &cache, &e)?,
        Some(b) if b.mode() == FeedbackMode::Fa => fa_backward(net, b, &cache, &e)?,
        Some(b) => dfa_backward(net, b, &cache, &e)?,
    };
    layer_gradients(net, &cache, &signal)
}

fn accumulate(into: &mut Grads, other: Grads) -> Result<()> {
    for (acc, g) in into.iter_mut().zip(other) {
        match (acc.as_mut(), g) {
            (Some((aw, ab)), Some((gw, gb))) => {
                aw.axpy(1.0, &gw)?;
                ab.axpy(1.0, &gb)?;
            }
            (None, g) => *acc = g,
            (Some(_), None) => {}
        }
    }
    Ok(())
}

/// Gradient sum over `batch`, accumulated in fixed-size chunks.
fn batch_grads(net: &Network, feedback: Option<&FeedbackMatrices>, ds: &Dataset, batch: &[usize]) -> Result<Grads> {
    let partials = batch
        .par_chunks(GRADIENT_CHUNK)
        .map(|chunk| {
            let mut sum: Grads = vec![None; net.depth()];
            for &i in chunk {
                accumulate(&mut sum, sample_grads(net, feedback, &ds.image(i), ds.labels[i])?)?;
            }
            Ok(sum)
        })
        .collect::<Result<Vec<Grads>>>()?;
    let mut total: Grads = vec![None; net.depth()];
    for p in partials {
        accumulate(&mut total, p)?;
    }
    Ok(total)
}

/// Mini-batch descent with batch-averaged updates `Δw = −η ⟨e zᵀ⟩`.
fn gradient_epoch(
    net: &mut Network,
    config: &TrainingConfig,
    feedback: Option<&FeedbackMatrices>,
    ds: &Dataset,
    order: &[usize],
    rate: Real,
) -> Result<()> {
    for (step, batch) in order.chunks(config.batch_size).enumerate() {
        let grads = batch_grads(net, feedback, ds, batch)?;
        let scale = -rate / batch.len() as Real;
        for (i, g) in grads.into_iter().enumerate() {
            let (Some((gw, gb)), Some(p)) = (g, net.layer_mut(i)) else {
                continue;
            };
            p.weights.axpy(scale, &gw)?;
            p.bias.axpy(scale, &gb)?;
            if !p.weights.is_finite() || !p.bias.is_finite() {
                return Err(Error::Divergence {
                    layer: i,
                    step: Some(step),
                });
            }
        }
        apply_masks(net)?;
    }
    Ok(())
}

/// One unsupervised pass over the data for every conv layer, bottom-up, with
/// weight decay after each batch; then a fresh ridge readout on the
/// resulting features.
fn hebbian_epoch(net: &mut Network, config: &TrainingConfig, ds: &Dataset, order: &[usize], rate: Real) -> Result<()> {
    let mut rule = config.rule;
    rule.eta = rate;
    let conv_layers: Vec<usize> = (0..net.depth()).filter(|&i| net.specs[i].kind == LayerKind::Conv).collect();
    for &layer in &conv_layers {
        for batch in order.chunks(config.batch_size) {
            hebbian_train_layer(net, layer, batch.iter().map(|&i| ds.image(i)), &rule)?;
            if let Some(wd) = rule.weight_decay {
                apply_weight_decay(net, layer, 1.0 - rate * wd)?;
            }
        }
    }
    fit_readout(net, ds, config.ridge_lambda)
}

/// Refits the ridge readout of `net` on the features of every sample in `ds`.
pub fn fit_readout(net: &mut Network, ds: &Dataset, lambda: Real) -> Result<()> {
    let features = (0..ds.len())
        .into_par_iter()
        .map(|i| net.features(&ds.image(i)))
        .collect::<Result<Vec<_>>>()?;
    let d = features.first().map_or(0, Tensor::len);
    let mut flat = Vec::with_capacity(ds.len() * d);
    let mut targets = Vec::with_capacity(ds.len() * ds.class_count);
    for (f, &label) in features.iter().zip(&ds.labels) {
        flat.extend_from_slice(f.data());
        targets.extend_from_slice(one_hot(label, ds.class_count).data());
    }
    let x = Tensor::new(vec![ds.len(), d], flat)?;
    let y = Tensor::new(vec![ds.len(), ds.class_count], targets)?;
    net.readout = Some(ridge_fit(&x, &y, lambda)?);
    Ok(())
}
