//! Many independent runs executed in parallel.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::config::TrainingConfig;
use crate::bench::dataset::Dataset;
use crate::bench::record::RunRecord;
use crate::bench::train::train;
use crate::error::{Error, Result};
use crate::network::{conv_stack, HeadKind, Network};
use crate::numerics::ActivationKind;
use crate::Real;

/// Conv + pool blocks, one per filter count. Gradient rules get ReLU units
/// and a dense class-score layer; Hebbian rules get triangle units and a
/// ridge readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkRecipe {
    pub filters: Vec<usize>,
    pub kernel: usize,
    #[serde(default = "unit_gain")]
    pub gain: Real,
}

fn unit_gain() -> Real {
    1.0
}

impl NetworkRecipe {
    pub fn new(filters: Vec<usize>, kernel: usize) -> Self {
        Self {
            filters,
            kernel,
            gain: 1.0,
        }
    }

    pub fn build(&self, hebbian: bool, input_shape: &[usize], classes: usize, seed: u64) -> Result<Network> {
        if self.filters.is_empty() {
            return Err(Error::Config("network recipe needs at least one conv layer".into()));
        }
        let (specs, head) = if hebbian {
            (conv_stack(&self.filters, self.kernel, ActivationKind::Triangle, None), HeadKind::Ridge)
        } else {
            (conv_stack(&self.filters, self.kernel, ActivationKind::Relu, Some(classes)), HeadKind::Linear)
        };
        Network::build(input_shape, specs, head, seed, self.gain)
    }

    pub fn describe(&self) -> String {
        let filters: Vec<String> = self.filters.iter().map(ToString::to_string).collect();
        format!("conv{}k{}g{}", filters.join("-"), self.kernel, self.gain)
    }
}

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub config: TrainingConfig,
    pub recipe: NetworkRecipe,
    pub tags: BTreeMap<String, String>,
}

/// Builds the network for `spec` (seeded by the run's seed) and trains it.
pub fn run_one(spec: &RunSpec, train_ds: &Dataset, test_ds: &Dataset) -> Result<(RunRecord, Network)> {
    let mut net = spec.recipe.build(
        spec.config.rule.kind.is_hebbian(),
        &train_ds.image_shape(),
        train_ds.class_count,
        spec.config.seed,
    )?;
    let mut record = train(&mut net, &spec.config, train_ds, test_ds)?;
    let mut tags = spec.tags.clone();
    tags.insert("network".into(), spec.recipe.describe());
    record.set_tags(tags);
    Ok((record, net))
}

/// Runs every spec on a pool of `threads` workers (0 picks the default) and
/// returns results in spec order. `sink` sees each finished run as it
/// completes.
pub fn run_sweep<F>(specs: &[RunSpec], train_ds: &Dataset, test_ds: &Dataset, threads: usize, sink: F) -> Result<Vec<Result<RunRecord>>>
where
    F: Fn(usize, &RunRecord, &Network) + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        specs
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let (record, net) = run_one(spec, train_ds, test_ds)?;
                sink(i, &record, &net);
                Ok(record)
            })
            .collect()
    }))
}
