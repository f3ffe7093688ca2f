//! Run records, multi-seed aggregation and result files.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::bench::config::TrainingConfig;
use crate::error::{Error, Result};
use crate::Real;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub schema_version: u32,
    /// Hash of the configuration (seed excluded) and tags.
    pub fingerprint: String,
    pub config: TrainingConfig,
    /// Free-form context such as dataset and topology; part of the fingerprint.
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
    /// One-based epoch numbers at which the test set was scored.
    pub eval_epochs: Vec<usize>,
    pub test_accuracy: Vec<Real>,
    /// Wall-clock seconds per completed epoch.
    pub epoch_seconds: Vec<f64>,
    /// Fraction of zero weights measured after each completed epoch.
    pub sparsity: Vec<Real>,
    pub final_sparsity: Real,
    pub failed: bool,
    #[serde(default)]
    pub failure: Option<String>,
}

fn config_value(config: &TrainingConfig, tags: &BTreeMap<String, String>) -> Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    v.as_object_mut().expect("object").remove("seed");
    serde_json::json!({ "config": v, "tags": tags })
}

pub fn fingerprint(config: &TrainingConfig, tags: &BTreeMap<String, String>) -> String {
    let canonical = serde_json::to_string(&config_value(config, tags)).expect("serializable");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl RunRecord {
    pub fn new(config: TrainingConfig, tags: BTreeMap<String, String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            fingerprint: fingerprint(&config, &tags),
            config,
            tags,
            eval_epochs: Vec::new(),
            test_accuracy: Vec::new(),
            epoch_seconds: Vec::new(),
            sparsity: Vec::new(),
            final_sparsity: 0.0,
            failed: false,
            failure: None,
        }
    }

    /// Replaces the tags and recomputes the fingerprint.
    pub fn set_tags(&mut self, tags: BTreeMap<String, String>) {
        self.fingerprint = fingerprint(&self.config, &tags);
        self.tags = tags;
    }

    pub fn final_accuracy(&self) -> Option<Real> {
        self.test_accuracy.last().copied()
    }
}

/// Per-epoch mean and sample standard deviation over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub fingerprint: String,
    pub epochs: Vec<usize>,
    pub mean: Vec<Real>,
    /// Sample (n − 1) standard deviation; 0 where only one run contributes.
    pub std: Vec<Real>,
    /// Runs contributing at each epoch.
    pub counts: Vec<usize>,
    pub runs: usize,
    pub single_run: bool,
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

fn divergent_fields(runs: &[RunRecord]) -> Vec<String> {
    let flat: Vec<BTreeMap<String, Value>> = runs
        .iter()
        .map(|r| {
            let mut m = BTreeMap::new();
            flatten("", &config_value(&r.config, &r.tags), &mut m);
            m
        })
        .collect();
    let mut keys: Vec<&String> = flat.iter().flat_map(|m| m.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter(|k| flat.iter().any(|m| m.get(*k) != flat[0].get(*k)))
        .cloned()
        .collect()
}

/// Mean and sample standard deviation, computed on values shifted by the
/// first one so that identical runs give exactly that value and exactly 0.
fn mean_std(values: &[Real]) -> (Real, Real) {
    let n = values.len() as Real;
    let shift = values[0];
    let offset = values.iter().map(|v| v - shift).sum::<Real>() / n;
    if values.len() < 2 {
        return (shift + offset, 0.0);
    }
    let var = values.iter().map(|v| (v - shift - offset).powi(2)).sum::<Real>() / (n - 1.0);
    (shift + offset, var.sqrt())
}

fn fold_series(runs: &[&RunRecord], fingerprint: String) -> Aggregate {
    let longest = runs.iter().max_by_key(|r| r.test_accuracy.len()).expect("non-empty");
    let epochs = longest.eval_epochs.clone();
    let mut mean = Vec::with_capacity(epochs.len());
    let mut std = Vec::with_capacity(epochs.len());
    let mut counts = Vec::with_capacity(epochs.len());
    for k in 0..epochs.len() {
        let values: Vec<Real> = runs.iter().filter_map(|r| r.test_accuracy.get(k).copied()).collect();
        let (m, s) = mean_std(&values);
        mean.push(m);
        std.push(s);
        counts.push(values.len());
    }
    Aggregate {
        fingerprint,
        epochs,
        mean,
        std,
        counts,
        runs: runs.len(),
        single_run: runs.len() == 1,
    }
}

/// Aggregates runs that differ only in their seed.
pub fn aggregate(runs: &[RunRecord]) -> Result<Aggregate> {
    let Some(first) = runs.first() else {
        return Err(Error::Config("nothing to aggregate".into()));
    };
    if runs.iter().any(|r| r.fingerprint != first.fingerprint) {
        return Err(Error::Aggregation {
            fields: divergent_fields(runs),
        });
    }
    let refs: Vec<&RunRecord> = runs.iter().collect();
    Ok(fold_series(&refs, first.fingerprint.clone()))
}

pub fn write_jsonl(records: &[RunRecord], mut w: impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one record per non-blank line. All records must share one schema version.
pub fn read_jsonl(r: impl BufRead) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    let mut version = None;
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line)?;
        let v = value.get("schema_version").and_then(Value::as_u64);
        match (version, v) {
            (_, None) => return Err(Error::Config(format!("line {}: missing schema_version", n + 1))),
            (None, Some(v)) => version = Some(v),
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!("line {}: mixed schema versions {a} and {b}", n + 1)));
            }
            _ => {}
        }
        if v != Some(SCHEMA_VERSION as u64) {
            return Err(Error::Config(format!(
                "line {}: unsupported schema version {}",
                n + 1,
                v.unwrap_or_default()
            )));
        }
        out.push(serde_json::from_value(value)?);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct TidyRow<'a> {
    rule: &'a str,
    data_fraction: Real,
    noise_kind: String,
    noise_level: Real,
    sparsity: Real,
    seed: u64,
    epoch: usize,
    test_accuracy: Real,
}

/// One row per (run, evaluated epoch). Timing fields are deliberately absent.
pub fn write_tidy_csv(records: &[RunRecord], w: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in records {
        for (&epoch, &acc) in r.eval_epochs.iter().zip(&r.test_accuracy) {
            csv.serialize(TidyRow {
                rule: r.config.rule.kind.label(),
                data_fraction: r.config.data_fraction,
                noise_kind: r.config.noise.kind.to_string(),
                noise_level: r.config.noise.level,
                sparsity: r.config.sparsity.unwrap_or(0.0),
                seed: r.config.seed,
                epoch,
                test_accuracy: acc,
            })?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// Grouping key for accuracy curves.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveKey {
    pub rule: String,
    pub data_fraction: Real,
    pub noise_kind: String,
    pub noise_level: Real,
    pub sparsity: Real,
}

impl CurveKey {
    pub fn of(r: &RunRecord) -> Self {
        Self {
            rule: r.config.rule.kind.label().to_string(),
            data_fraction: r.config.data_fraction,
            noise_kind: r.config.noise.kind.to_string(),
            noise_level: r.config.noise.level,
            sparsity: r.config.sparsity.unwrap_or(0.0),
        }
    }
}

/// Groups records by [`CurveKey`] in first-appearance order and aggregates each group.
pub fn curves(records: &[RunRecord]) -> Vec<(CurveKey, Aggregate)> {
    let mut groups: Vec<(CurveKey, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        let key = CurveKey::of(r);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(k, members)| {
            let fp = members[0].fingerprint.clone();
            (k, fold_series(&members, fp))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct CurveRow<'a> {
    rule: &'a str,
    data_fraction: Real,
    noise_kind: &'a str,
    noise_level: Real,
    sparsity: Real,
    epoch: usize,
    mean_accuracy: Real,
    std_accuracy: Real,
    runs: usize,
}

pub fn write_curves_csv(records: &[RunRecord], w: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for (key, agg) in curves(records) {
        for i in 0..agg.epochs.len() {
            csv.serialize(CurveRow {
                rule: &key.rule,
                data_fraction: key.data_fraction,
                noise_kind: &key.noise_kind,
                noise_level: key.noise_level,
                sparsity: key.sparsity,
                epoch: agg.epochs[i],
                mean_accuracy: agg.mean[i],
                std_accuracy: agg.std[i],
                runs: agg.counts[i],
            })?;
        }
    }
    csv.flush()?;
    Ok(())
}
