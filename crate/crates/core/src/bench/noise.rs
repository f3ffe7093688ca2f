//! Input corruption.
//!
//! * Random noise: every pixel value is, independently with probability
//!   `level`, replaced by a fresh uniform draw in `[0, 1)`.
//! * Pepper noise: `⌊level · H · W⌋` spatial positions per image, sampled
//!   without replacement, are set to 0 in every channel (or, in per-channel
//!   mode, positions are sampled independently for each channel plane).
//!
//! Values outside the corrupted set are left bit-for-bit untouched.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bench::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    #[default]
    None,
    Random,
    Pepper,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::None => "none",
            NoiseKind::Random => "random",
            NoiseKind::Pepper => "pepper",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(NoiseKind::None),
            "random" => Ok(NoiseKind::Random),
            "pepper" => Ok(NoiseKind::Pepper),
            other => Err(Error::Config(format!("unknown noise kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub level: Real,
    /// Pepper only: sample positions separately for every channel.
    #[serde(default)]
    pub per_channel: bool,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn random(level: Real) -> Self {
        Self {
            kind: NoiseKind::Random,
            level,
            per_channel: false,
        }
    }

    pub fn pepper(level: Real) -> Self {
        Self {
            kind: NoiseKind::Pepper,
            level,
            per_channel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.level) {
            return Err(Error::Config(format!("noise level must be in [0, 1], got {}", self.level)));
        }
        Ok(())
    }

    pub fn apply(&self, ds: &Dataset, seed: u64) -> Result<Dataset> {
        self.validate()?;
        match self.kind {
            NoiseKind::None => Ok(ds.clone()),
            NoiseKind::Random => add_random_noise(ds, self.level, seed),
            NoiseKind::Pepper if self.per_channel => add_pepper_noise_per_channel(ds, self.level, seed),
            NoiseKind::Pepper => add_pepper_noise(ds, self.level, seed),
        }
    }
}

fn check_level(level: Real) -> Result<()> {
    NoiseSpec::random(level).validate()
}

pub fn add_random_noise(ds: &Dataset, level: Real, seed: u64) -> Result<Dataset> {
    check_level(level)?;
    let mut out = ds.clone();
    if level == 0.0 {
        return Ok(out);
    }
    let mut rng = Rng::new(seed);
    for v in out.images.data_mut() {
        if rng.uniform() < level {
            *v = rng.uniform();
        }
    }
    Ok(out)
}

fn spatial(ds: &Dataset) -> (usize, usize) {
    let s = ds.images.shape();
    (s[1], s[2] * s[3])
}

pub fn add_pepper_noise(ds: &Dataset, level: Real, seed: u64) -> Result<Dataset> {
    check_level(level)?;
    let mut out = ds.clone();
    let (channels, plane) = spatial(ds);
    let count = (level * plane as Real).floor() as usize;
    if count == 0 {
        return Ok(out);
    }
    let mut rng = Rng::new(seed);
    let d = channels * plane;
    for image in out.images.data_mut().chunks_exact_mut(d) {
        for p in rng.sample_indices(plane, count) {
            for c in 0..channels {
                image[c * plane + p] = 0.0;
            }
        }
    }
    Ok(out)
}

pub fn add_pepper_noise_per_channel(ds: &Dataset, level: Real, seed: u64) -> Result<Dataset> {
    check_level(level)?;
    let mut out = ds.clone();
    let (_, plane) = spatial(ds);
    let count = (level * plane as Real).floor() as usize;
    if count == 0 {
        return Ok(out);
    }
    let mut rng = Rng::new(seed);
    for channel in out.images.data_mut().chunks_exact_mut(plane) {
        for p in rng.sample_indices(plane, count) {
            channel[p] = 0.0;
        }
    }
    Ok(out)
}
