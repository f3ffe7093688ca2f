use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Tanh,
    Identity,
    /// `max(0, a - mean(a))` over a unit group: the channels at one spatial
    /// site for `C×H×W` tensors, the whole vector for 1-D tensors.
    Triangle,
}

impl ActivationKind {
    pub(crate) fn code(self) -> u8 {
        match self {
            ActivationKind::Relu => 0,
            ActivationKind::Tanh => 1,
            ActivationKind::Identity => 2,
            ActivationKind::Triangle => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => ActivationKind::Relu,
            1 => ActivationKind::Tanh,
            2 => ActivationKind::Identity,
            3 => ActivationKind::Triangle,
            other => return Err(Error::Config(format!("unknown activation code {other}"))),
        })
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(ActivationKind::Relu),
            "tanh" => Ok(ActivationKind::Tanh),
            "identity" | "linear" => Ok(ActivationKind::Identity),
            "triangle" => Ok(ActivationKind::Triangle),
            other => Err(Error::Config(format!(
                "unknown activation `{other}` (expected relu, tanh, identity or triangle)"
            ))),
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Identity => "identity",
            ActivationKind::Triangle => "triangle",
        };
        f.write_str(name)
    }
}

/// (group size, stride between group members, number of groups)
fn groups(shape: &[usize]) -> (usize, usize, usize) {
    match shape {
        [] => (1, 1, 1),
        [n] => (*n, 1, 1),
        [c, rest @ ..] => {
            let sites: usize = rest.iter().product();
            (*c, sites, sites)
        }
    }
}

fn group_means(a: &Tensor) -> Vec<Real> {
    let (size, stride, count) = groups(a.shape());
    let d = a.data();
    (0..count)
        .map(|site| (0..size).map(|f| d[f * stride + site]).sum::<Real>() / size.max(1) as Real)
        .collect()
}

fn site_of(index: usize, shape: &[usize]) -> usize {
    let (_, stride, count) = groups(shape);
    if count == 1 {
        0
    } else {
        index % stride
    }
}

pub fn activation(kind: ActivationKind, a: &Tensor) -> Tensor {
    match kind {
        ActivationKind::Relu => a.map(|v| v.max(0.0)),
        ActivationKind::Tanh => a.map(Real::tanh),
        ActivationKind::Identity => a.clone(),
        ActivationKind::Triangle => {
            let means = group_means(a);
            let mut out = a.clone();
            let shape = a.shape().to_vec();
            for (i, v) in out.data_mut().iter_mut().enumerate() {
                *v = (*v - means[site_of(i, &shape)]).max(0.0);
            }
            out
        }
    }
}

/// Elementwise derivative. Relu at exactly zero is 0. For triangle this is the
/// diagonal of the group Jacobian, `1{a > mean} * (1 - 1/group)`.
pub fn activation_deriv(kind: ActivationKind, a: &Tensor) -> Tensor {
    match kind {
        ActivationKind::Relu => a.map(|v| if v > 0.0 { 1.0 } else { 0.0 }),
        ActivationKind::Tanh => a.map(|v| {
            let t = v.tanh();
            1.0 - t * t
        }),
        ActivationKind::Identity => a.map(|_| 1.0),
        ActivationKind::Triangle => {
            let means = group_means(a);
            let (size, _, _) = groups(a.shape());
            let diag = 1.0 - 1.0 / size.max(1) as Real;
            let shape = a.shape().to_vec();
            let mut out = a.clone();
            for (i, v) in out.data_mut().iter_mut().enumerate() {
                *v = if *v > means[site_of(i, &shape)] { diag } else { 0.0 };
            }
            out
        }
    }
}
