use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ActivationKind, ConvGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Pool,
    Dense,
}

impl LayerKind {
    pub fn has_params(self) -> bool {
        !matches!(self, LayerKind::Pool)
    }
}

/// One layer of a feed-forward topology.
///
/// For pool layers `kernel` is the window and `fan_out` is unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub kind: LayerKind,
    #[serde(default)]
    pub fan_out: usize,
    #[serde(default)]
    pub kernel: usize,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub padding: usize,
    #[serde(default = "identity")]
    pub activation: ActivationKind,
}

fn one() -> usize {
    1
}

fn identity() -> ActivationKind {
    ActivationKind::Identity
}

impl LayerSpec {
    /// Stride-1 convolution with "same" padding for odd kernels.
    pub fn conv(filters: usize, kernel: usize, activation: ActivationKind) -> Self {
        Self {
            kind: LayerKind::Conv,
            fan_out: filters,
            kernel,
            stride: 1,
            padding: kernel / 2,
            activation,
        }
    }

    pub fn pool(window: usize, stride: usize) -> Self {
        Self {
            kind: LayerKind::Pool,
            fan_out: 0,
            kernel: window,
            stride,
            padding: 0,
            activation: ActivationKind::Identity,
        }
    }

    pub fn dense(units: usize, activation: ActivationKind) -> Self {
        Self {
            kind: LayerKind::Dense,
            fan_out: units,
            kernel: 0,
            stride: 1,
            padding: 0,
            activation,
        }
    }

    pub fn with_padding(mut self, padding: usize) -> Self {
        self.padding = padding;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    /// Output shape for a given input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self.kind {
            LayerKind::Conv => {
                let [c, h, w] = *input else {
                    return Err(Error::Build(format!("conv needs a C×H×W input, got {input:?}")));
                };
                if self.fan_out == 0 {
                    return Err(Error::Build("conv layer needs at least one filter".into()));
                }
                let g = ConvGeometry::new([c, h, w], self.kernel, self.stride, self.padding)
                    .map_err(|e| Error::Build(e.to_string()))?;
                Ok(vec![self.fan_out, g.out_height, g.out_width])
            }
            LayerKind::Pool => {
                let [c, h, w] = *input else {
                    return Err(Error::Build(format!("pool needs a C×H×W input, got {input:?}")));
                };
                if self.kernel == 0 || self.stride == 0 || self.kernel > h || self.kernel > w {
                    return Err(Error::Build(format!(
                        "pool window {} does not fit {h}×{w}",
                        self.kernel
                    )));
                }
                Ok(vec![c, (h - self.kernel) / self.stride + 1, (w - self.kernel) / self.stride + 1])
            }
            LayerKind::Dense => {
                if self.fan_out == 0 {
                    return Err(Error::Build("dense layer needs at least one unit".into()));
                }
                Ok(vec![self.fan_out])
            }
        }
    }

    /// Weight tensor shape for a given input shape (`None` for pool).
    pub fn weight_shape(&self, input: &[usize]) -> Option<Vec<usize>> {
        match self.kind {
            LayerKind::Conv => Some(vec![self.fan_out, input[0], self.kernel, self.kernel]),
            LayerKind::Dense => Some(vec![self.fan_out, input.iter().product()]),
            LayerKind::Pool => None,
        }
    }
}

/// Conv/pool stages followed by an optional dense classifier.
///
/// `filters = [100, 196, 400]`, `kernel = 5`, `classes = Some(10)` gives the
/// four-layer CIFAR network: three 5×5 conv layers, each followed by 2×2
/// stride-2 max pooling, and a linear read-out.
pub fn conv_stack(filters: &[usize], kernel: usize, activation: ActivationKind, classes: Option<usize>) -> Vec<LayerSpec> {
    let mut specs = Vec::new();
    for &f in filters {
        specs.push(LayerSpec::conv(f, kernel, activation));
        specs.push(LayerSpec::pool(2, 2));
    }
    if let Some(c) = classes {
        specs.push(LayerSpec::dense(c, ActivationKind::Identity));
    }
    specs
}

pub const PAPER_FILTERS: [usize; 3] = [100, 196, 400];
