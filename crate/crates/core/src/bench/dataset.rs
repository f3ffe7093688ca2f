use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Labelled images, `N×C×H×W` with pixel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Tensor,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub split: Split,
}

impl Dataset {
    pub fn new(images: Tensor, labels: Vec<usize>, class_count: usize, split: Split) -> Result<Self> {
        let ds = Self {
            images,
            labels,
            class_count,
            split,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.ndim() != 4 {
            return Err(Error::Dimension(format!("images must be N×C×H×W, got {:?}", self.images.shape())));
        }
        if self.images.shape()[0] != self.labels.len() {
            return Err(Error::Dimension(format!(
                "{} images but {} labels",
                self.images.shape()[0],
                self.labels.len()
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.class_count) {
            return Err(Error::Config(format!("label {bad} out of range for {} classes", self.class_count)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `[C, H, W]`
    pub fn image_shape(&self) -> Vec<usize> {
        self.images.shape()[1..].to_vec()
    }

    pub fn image_len(&self) -> usize {
        self.images.shape()[1..].iter().product()
    }

    pub fn image(&self, i: usize) -> Tensor {
        self.images.slice_outer(i)
    }

    /// New dataset holding the given samples in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let d = self.image_len();
        let src = self.images.data();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(&src[i * d..(i + 1) * d]);
        }
        let mut shape = self.images.shape().to_vec();
        shape[0] = indices.len();
        Dataset {
            images: Tensor::new(shape, data).expect("selected shape"),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            split: self.split,
        }
    }

    pub fn class_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for &l in &self.labels {
            *h.entry(l).or_insert(0) += 1;
        }
        h
    }
}
