//! The experiment file: a strict TOML document describing a sweep.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use biolearn::bench::{NetworkRecipe, NoiseKind, NoiseSpec, RunSpec, Schedule, TrainingConfig};
use biolearn::credit::{RuleKind, UpdateRule};
use biolearn::Real;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Where `runs.jsonl`, `runs.csv` and checkpoints are written.
    pub output_dir: PathBuf,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default = "one")]
    pub eval_every: usize,
    #[serde(default = "yes")]
    pub stratified: bool,
    #[serde(default = "ridge_lambda")]
    pub ridge_lambda: Real,
    #[serde(default)]
    pub zca_epsilon: Option<Real>,
    /// Save every trained network under `output_dir/checkpoints`.
    #[serde(default)]
    pub checkpoints: bool,
    pub dataset: DatasetConfig,
    pub network: NetworkRecipe,
    pub sweep: SweepAxes,
    /// Per-rule overrides of the published hyper-parameters.
    #[serde(default)]
    pub rules: BTreeMap<String, RuleSettings>,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn ridge_lambda() -> Real {
    biolearn::bench::DEFAULT_RIDGE_LAMBDA
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Synthetic,
    Cifar10,
    Cifar100,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// CIFAR directory; `--data-dir` and `BIOLEARN_DATA_DIR` take precedence.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "train_per_class")]
    pub train_per_class: usize,
    #[serde(default = "test_per_class")]
    pub test_per_class: usize,
    #[serde(default)]
    pub seed: u64,
}

fn train_per_class() -> usize {
    200
}

fn test_per_class() -> usize {
    100
}

impl DatasetConfig {
    pub fn synthetic() -> Self {
        Self {
            kind: DatasetKind::Synthetic,
            dir: None,
            train_per_class: train_per_class(),
            test_per_class: test_per_class(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub rules: Vec<RuleKind>,
    #[serde(default = "full_data")]
    pub data_fractions: Vec<Real>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    #[serde(default = "no_noise")]
    pub noise_levels: Vec<Real>,
    /// Pepper only: sample zeroed positions per channel.
    #[serde(default)]
    pub per_channel: bool,
    /// Omit for dense networks.
    #[serde(default)]
    pub sparsities: Option<Vec<Real>>,
}

fn full_data() -> Vec<Real> {
    vec![1.0]
}

fn no_noise() -> Vec<Real> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSettings {
    pub eta: Option<Real>,
    pub k: Option<usize>,
    pub weight_decay: Option<Real>,
    pub schedule: Option<Schedule>,
    /// Overrides the top-level `zca_epsilon` for this rule.
    pub zca_epsilon: Option<Real>,
}

/// Why a config could not be turned into runs.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Read(String),
    Parse(String),
    Invalid(String),
    NoRuns,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Read(m) | ConfigError::Parse(m) | ConfigError::Invalid(m) => f.write_str(m),
            ConfigError::NoRuns => f.write_str("no runs"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    /// Parses a config document. Parse errors carry line and column.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn rule_for(&self, kind: RuleKind, seed: u64) -> Result<TrainingConfig, ConfigError> {
        let mut config = TrainingConfig::paper(kind, self.epochs, seed);
        let settings = self
            .rules
            .iter()
            .find(|(name, _)| name.parse::<RuleKind>().ok() == Some(kind))
            .map(|(_, s)| s.clone())
            .unwrap_or_default();
        let mut rule: UpdateRule = config.rule;
        if let Some(eta) = settings.eta {
            rule.eta = eta;
        }
        if let Some(k) = settings.k {
            rule.k = k;
        }
        if settings.weight_decay.is_some() {
            rule.weight_decay = settings.weight_decay;
        }
        if let Some(schedule) = settings.schedule {
            config.schedule = schedule;
        }
        config.rule = rule;
        config.batch_size = self.batch_size;
        config.eval_every = self.eval_every;
        config.stratified = self.stratified;
        config.ridge_lambda = self.ridge_lambda;
        config.zca_epsilon = settings.zca_epsilon.or(self.zca_epsilon);
        Ok(config)
    }

    /// Every run of the sweep, ordered rule, fraction, noise level, sparsity,
    /// then seed.
    pub fn expand(&self) -> Result<Vec<RunSpec>, ConfigError> {
        for name in self.rules.keys() {
            name.parse::<RuleKind>()
                .map_err(|_| ConfigError::Invalid(format!("[rules.{name}] names no known rule")))?;
        }
        let axes = &self.sweep;
        if axes.noise_kind == NoiseKind::None && axes.noise_levels.iter().any(|&l| l != 0.0) {
            return Err(ConfigError::Invalid("noise levels other than 0 need a noise_kind".into()));
        }
        let sparsities: Vec<Option<Real>> = match &axes.sparsities {
            None => vec![None],
            Some(list) => list.iter().map(|&s| Some(s)).collect(),
        };
        let mut runs = Vec::new();
        for &kind in &axes.rules {
            for &fraction in &axes.data_fractions {
                for &level in &axes.noise_levels {
                    for &sparsity in &sparsities {
                        for &seed in &axes.seeds {
                            let mut config = self.rule_for(kind, seed)?;
                            config.data_fraction = fraction;
                            config.noise = NoiseSpec {
                                kind: axes.noise_kind,
                                level,
                                per_channel: axes.per_channel,
                            };
                            config.sparsity = sparsity;
                            config.validate().map_err(|e| {
                                ConfigError::Invalid(format!("{kind}, fraction {fraction}, noise {level}, seed {seed}: {e}"))
                            })?;
                            let mut tags = BTreeMap::new();
                            tags.insert("dataset".to_string(), self.dataset_tag());
                            runs.push(RunSpec {
                                config,
                                recipe: self.network.clone(),
                                tags,
                            });
                        }
                    }
                }
            }
        }
        if runs.is_empty() {
            return Err(ConfigError::NoRuns);
        }
        Ok(runs)
    }

    fn dataset_tag(&self) -> String {
        let d = &self.dataset;
        match d.kind {
            DatasetKind::Synthetic => format!("synthetic:{}:{}:{}", d.train_per_class, d.test_per_class, d.seed),
            DatasetKind::Cifar10 => "cifar10".into(),
            DatasetKind::Cifar100 => "cifar100".into(),
        }
    }
}
