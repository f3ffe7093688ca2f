use serde::{Deserialize, Serialize};

use crate::bench::noise::NoiseSpec;
use crate::credit::{RuleKind, UpdateRule};
use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Schedule {
    #[default]
    Constant,
    /// `η_e = η₀ · gamma^⌊e / step_size⌋` for zero-based epoch `e`.
    Step { gamma: Real, step_size: usize },
}

impl Schedule {
    pub fn rate(&self, initial: Real, epoch: usize) -> Real {
        match *self {
            Schedule::Constant => initial,
            Schedule::Step { gamma, step_size } => initial * gamma.powi((epoch / step_size) as i32),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Schedule::Step { gamma, step_size } = *self {
            if step_size == 0 || !(gamma > 0.0) {
                return Err(Error::Config(format!(
                    "step schedule needs step_size ≥ 1 and gamma > 0, got {step_size} and {gamma}"
                )));
            }
        }
        Ok(())
    }
}

pub const DEFAULT_STEP_GAMMA: Real = 0.9;
pub const DEFAULT_RIDGE_LAMBDA: Real = 1.0;

/// Everything that determines one training run, seed included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub rule: UpdateRule,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default = "one")]
    pub data_fraction: Real,
    #[serde(default = "yes")]
    pub stratified: bool,
    #[serde(default)]
    pub schedule: Schedule,
    /// Fraction of weights held at zero by a random mask fixed at initialization.
    #[serde(default)]
    pub sparsity: Option<Real>,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub seed: u64,
    #[serde(default = "one_epoch")]
    pub eval_every: usize,
    /// Regularization of the Hebbian ridge readout.
    #[serde(default = "ridge_lambda")]
    pub ridge_lambda: Real,
    /// Whiten inputs with ZCA fitted on the training images.
    #[serde(default)]
    pub zca_epsilon: Option<Real>,
}

fn one() -> Real {
    1.0
}

fn yes() -> bool {
    true
}

fn one_epoch() -> usize {
    1
}

fn ridge_lambda() -> Real {
    DEFAULT_RIDGE_LAMBDA
}

impl TrainingConfig {
    pub fn new(rule: UpdateRule, epochs: usize, batch_size: usize, seed: u64) -> Self {
        Self {
            rule,
            epochs,
            batch_size,
            data_fraction: 1.0,
            stratified: true,
            schedule: Schedule::Constant,
            sparsity: None,
            noise: NoiseSpec::none(),
            seed,
            eval_every: 1,
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            zca_epsilon: None,
        }
    }

    /// Published CIFAR hyper-parameters: batch 100; HB η 1e-5 with weight
    /// decay 0.95; FA and DFA η 5e-5; BP η 1e-5 with a step schedule of step
    /// size 1 (gamma defaults to [`DEFAULT_STEP_GAMMA`]).
    pub fn paper(kind: RuleKind, epochs: usize, seed: u64) -> Self {
        let (rule, schedule) = match kind {
            RuleKind::Bp => (
                UpdateRule::new(kind, 1e-5),
                Schedule::Step {
                    gamma: DEFAULT_STEP_GAMMA,
                    step_size: 1,
                },
            ),
            RuleKind::Fa | RuleKind::Dfa => (UpdateRule::new(kind, 5e-5), Schedule::Constant),
            RuleKind::HebbInstar | RuleKind::HebbVanilla => {
                (UpdateRule::new(kind, 1e-5).with_weight_decay(0.95), Schedule::Constant)
            }
        };
        Self {
            schedule,
            ..Self::new(rule, epochs, 100, seed)
        }
    }

    pub fn rate(&self, epoch: usize) -> Real {
        self.schedule.rate(self.rule.eta, epoch)
    }

    pub fn validate(&self) -> Result<()> {
        self.rule.validate()?;
        self.schedule.validate()?;
        self.noise.validate()?;
        if self.epochs == 0 || self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::Config("epochs, batch_size and eval_every must all be at least 1".into()));
        }
        if !(self.data_fraction > 0.0 && self.data_fraction <= 1.0) {
            return Err(Error::Config(format!("data fraction must be in (0, 1], got {}", self.data_fraction)));
        }
        if let Some(s) = self.sparsity {
            if !(0.0..1.0).contains(&s) {
                return Err(Error::Config(format!("sparsity must be in [0, 1), got {s}")));
            }
        }
        if !(self.ridge_lambda >= 0.0) {
            return Err(Error::Config("ridge lambda must be non-negative".into()));
        }
        if let Some(e) = self.zca_epsilon {
            if !(e > 0.0) {
                return Err(Error::Config("ZCA epsilon must be positive".into()));
            }
        }
        Ok(())
    }
}
