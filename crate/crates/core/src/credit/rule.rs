use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    #[serde(rename = "bp")]
    Bp,
    #[serde(rename = "fa")]
    Fa,
    #[serde(rename = "dfa")]
    Dfa,
    #[serde(rename = "hebb_vanilla")]
    HebbVanilla,
    #[serde(rename = "hebb_instar", alias = "hb")]
    HebbInstar,
}

impl RuleKind {
    pub fn is_hebbian(self) -> bool {
        matches!(self, RuleKind::HebbVanilla | RuleKind::HebbInstar)
    }

    /// Short label used in tables and file names.
    pub fn label(self) -> &'static str {
        match self {
            RuleKind::Bp => "bp",
            RuleKind::Fa => "fa",
            RuleKind::Dfa => "dfa",
            RuleKind::HebbVanilla => "hebb_vanilla",
            RuleKind::HebbInstar => "hb",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bp" | "backprop" => Ok(RuleKind::Bp),
            "fa" => Ok(RuleKind::Fa),
            "dfa" => Ok(RuleKind::Dfa),
            "hebb_vanilla" => Ok(RuleKind::HebbVanilla),
            "hb" | "hebb_instar" | "hebbian" => Ok(RuleKind::HebbInstar),
            other => Err(Error::Config(format!("unknown learning rule `{other}`"))),
        }
    }
}

/// A learning rule and its settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateRule {
    pub kind: RuleKind,
    /// Learning rate η.
    pub eta: Real,
    /// Winners kept per site by the Hebbian k-WTA competition.
    #[serde(default = "default_k")]
    pub k: usize,
    /// L2 weight-decay coefficient: every batch shrinks the trained weights
    /// by `w ← w (1 − η · weight_decay)`.
    #[serde(default)]
    pub weight_decay: Option<Real>,
}

fn default_k() -> usize {
    1
}

impl UpdateRule {
    pub fn new(kind: RuleKind, eta: Real) -> Self {
        Self {
            kind,
            eta,
            k: 1,
            weight_decay: None,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_weight_decay(mut self, coefficient: Real) -> Self {
        self.weight_decay = Some(coefficient);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::Config(format!("learning rate must be finite and non-negative, got {}", self.eta)));
        }
        if self.k == 0 {
            return Err(Error::Config("k-WTA needs k ≥ 1".into()));
        }
        if let Some(d) = self.weight_decay {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(Error::Config(format!("weight decay must be finite and non-negative, got {d}")));
            }
        }
        Ok(())
    }
}
