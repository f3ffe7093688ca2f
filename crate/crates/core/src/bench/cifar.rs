//! CIFAR-10 / CIFAR-100 binary batch files.
//!
//! Each record is the label byte(s) followed by 3072 pixel bytes: the
//! 1024-byte red plane, then green, then blue, each row-major 32×32.
//! CIFAR-10 records carry one label byte; CIFAR-100 records carry a coarse
//! and a fine label byte, and the fine label is used.
//! Files are downloadable from <https://www.cs.toronto.edu/~kriz/cifar.html>.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bench::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::Real;

pub const CIFAR_PIXELS: usize = 3 * 32 * 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CifarVariant {
    Cifar10,
    Cifar100,
}

impl CifarVariant {
    fn label_bytes(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 1,
            CifarVariant::Cifar100 => 2,
        }
    }

    pub fn class_count(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 10,
            CifarVariant::Cifar100 => 100,
        }
    }

    fn subdir(self) -> &'static str {
        match self {
            CifarVariant::Cifar10 => "cifar-10-batches-bin",
            CifarVariant::Cifar100 => "cifar-100-binary",
        }
    }

    fn files(self) -> (Vec<&'static str>, &'static str) {
        match self {
            CifarVariant::Cifar10 => (
                vec![
                    "data_batch_1.bin",
                    "data_batch_2.bin",
                    "data_batch_3.bin",
                    "data_batch_4.bin",
                    "data_batch_5.bin",
                ],
                "test_batch.bin",
            ),
            CifarVariant::Cifar100 => (vec!["train.bin"], "test.bin"),
        }
    }
}

impl FromStr for CifarVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "cifar10" => Ok(CifarVariant::Cifar10),
            "cifar100" => Ok(CifarVariant::Cifar100),
            other => Err(Error::Config(format!("unknown CIFAR variant `{other}`"))),
        }
    }
}

/// Reads one batch file into `(pixels scaled to [0,1], labels)`.
pub fn read_cifar_file(path: &Path, variant: CifarVariant) -> Result<(Vec<Real>, Vec<usize>)> {
    let record = variant.label_bytes() + CIFAR_PIXELS;
    let bytes = fs::read(path).map_err(|_| Error::Ingestion {
        path: path.to_path_buf(),
        expected: format!("a multiple of {record}"),
        found: None,
    })?;
    if bytes.is_empty() || bytes.len() % record != 0 {
        return Err(Error::Ingestion {
            path: path.to_path_buf(),
            expected: format!("a non-zero multiple of {record}"),
            found: Some(bytes.len() as u64),
        });
    }
    let n = bytes.len() / record;
    let mut pixels = Vec::with_capacity(n * CIFAR_PIXELS);
    let mut labels = Vec::with_capacity(n);
    for rec in bytes.chunks_exact(record) {
        let label = rec[variant.label_bytes() - 1] as usize;
        if label >= variant.class_count() {
            return Err(Error::Ingestion {
                path: path.to_path_buf(),
                expected: format!("labels below {}", variant.class_count()),
                found: None,
            });
        }
        labels.push(label);
        pixels.extend(rec[variant.label_bytes()..].iter().map(|&b| b as Real / 255.0));
    }
    Ok((pixels, labels))
}

fn resolve_dir(dir: &Path, variant: CifarVariant) -> PathBuf {
    let nested = dir.join(variant.subdir());
    if nested.is_dir() {
        nested
    } else {
        dir.to_path_buf()
    }
}

fn load_split(dir: &Path, files: &[&str], variant: CifarVariant, split: Split) -> Result<Dataset> {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for f in files {
        let (p, l) = read_cifar_file(&dir.join(f), variant)?;
        pixels.extend(p);
        labels.extend(l);
    }
    let images = Tensor::new(vec![labels.len(), 3, 32, 32], pixels)?;
    Dataset::new(images, labels, variant.class_count(), split)
}

/// Loads the train and test splits from `dir` (or its standard
/// `cifar-10-batches-bin` / `cifar-100-binary` subdirectory).
pub fn load_cifar(dir: impl AsRef<Path>, variant: CifarVariant) -> Result<(Dataset, Dataset)> {
    let dir = resolve_dir(dir.as_ref(), variant);
    let (train_files, test_file) = variant.files();
    Ok((
        load_split(&dir, &train_files, variant, Split::Train)?,
        load_split(&dir, &[test_file], variant, Split::Test)?,
    ))
}
