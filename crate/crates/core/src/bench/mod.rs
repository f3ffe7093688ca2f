//! Experiment harness: datasets, noise, subsetting, the training loop,
//! run records and sweeps.

mod cifar;
mod config;
mod dataset;
mod noise;
mod record;
mod subset;
mod sweep;
mod synthetic;
mod train;

pub use cifar::{load_cifar, read_cifar_file, CifarVariant, CIFAR_PIXELS};
pub use config::{Schedule, TrainingConfig, DEFAULT_RIDGE_LAMBDA, DEFAULT_STEP_GAMMA};
pub use dataset::{Dataset, Split};
pub use noise::{add_pepper_noise, add_pepper_noise_per_channel, add_random_noise, NoiseKind, NoiseSpec};
pub use record::{
    aggregate, curves, fingerprint, read_jsonl, write_curves_csv, write_jsonl, write_tidy_csv, Aggregate, CurveKey,
    RunRecord, SCHEMA_VERSION,
};
pub use subset::subset;
pub use sweep::{run_one, run_sweep, NetworkRecipe, RunSpec};
pub use synthetic::{synthetic_shapes, synthetic_split, SYNTHETIC_CLASSES, SYNTHETIC_SIDE};
pub use train::{evaluate, fit_readout, train, train_prepared};
