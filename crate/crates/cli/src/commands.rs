//! Subcommand bodies. Each returns a process exit code: 0 on success,
//! 1 on a runtime failure, 2 on a usage or configuration error.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use biolearn::bench::{
    curves, load_cifar, read_jsonl, run_sweep, synthetic_split, write_curves_csv, write_jsonl, write_tidy_csv,
    CifarVariant, Dataset, RunRecord,
};
use biolearn::network::{load_checkpoint, save_checkpoint};

use crate::config::{ConfigError, DatasetConfig, DatasetKind, ExperimentConfig};
use crate::ppm::render_first_layer;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Process-wide settings that sit outside the experiment file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses one per hardware thread.
    pub threads: usize,
    /// CIFAR directory, overriding the config.
    pub data_dir: Option<PathBuf>,
    /// Use the synthetic dataset whatever the config says.
    pub synthetic: bool,
}

fn fail(code: i32, message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    code
}

pub fn load_dataset(config: &DatasetConfig, options: &RunOptions) -> biolearn::Result<(Dataset, Dataset)> {
    let kind = if options.synthetic { DatasetKind::Synthetic } else { config.kind };
    let variant = match kind {
        DatasetKind::Synthetic => {
            return synthetic_split(config.train_per_class, config.test_per_class, config.seed);
        }
        DatasetKind::Cifar10 => CifarVariant::Cifar10,
        DatasetKind::Cifar100 => CifarVariant::Cifar100,
    };
    let dir = options
        .data_dir
        .clone()
        .or_else(|| config.dir.clone())
        .unwrap_or_else(|| PathBuf::from("data"));
    load_cifar(dir, variant)
}

fn checkpoint_name(index: usize, record: &RunRecord) -> String {
    format!("run{index:04}-{}-seed{}.biog", record.config.rule.kind.label(), record.config.seed)
}

fn write_outputs(dir: &Path, records: &[RunRecord]) -> biolearn::Result<()> {
    write_jsonl(records, BufWriter::new(File::create(dir.join("runs.jsonl"))?))?;
    write_tidy_csv(records, BufWriter::new(File::create(dir.join("runs.csv"))?))?;
    Ok(())
}

fn print_summary(records: &[RunRecord]) {
    println!(
        "{:<12} {:>8} {:>8} {:>7} {:>8} {:>5}  final accuracy",
        "rule", "fraction", "noise", "level", "sparsity", "runs"
    );
    for (key, agg) in curves(records) {
        let (Some(&mean), Some(&std)) = (agg.mean.last(), agg.std.last()) else {
            continue;
        };
        println!(
            "{:<12} {:>8} {:>8} {:>7} {:>8} {:>5}  {:.4} ± {:.4}{}",
            key.rule,
            key.data_fraction,
            key.noise_kind,
            key.noise_level,
            key.sparsity,
            agg.runs,
            mean,
            std,
            if agg.single_run { " (n=1)" } else { "" }
        );
    }
}

/// Runs the sweep described by the config file at `path`.
pub fn cmd_run(path: &Path, options: &RunOptions) -> i32 {
    let config = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let specs = match config.expand() {
        Ok(s) => s,
        Err(ConfigError::NoRuns) => return fail(EXIT_USAGE, "no runs"),
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let (train, test) = match load_dataset(&config.dataset, options) {
        Ok(d) => d,
        Err(e) => return fail(EXIT_RUNTIME, e),
    };
    let out = config.output_dir.clone();
    let ckpt_dir = out.join("checkpoints");
    let created = fs::create_dir_all(&out).and_then(|_| {
        if config.checkpoints {
            fs::create_dir_all(&ckpt_dir)
        } else {
            Ok(())
        }
    });
    if let Err(e) = created {
        return fail(EXIT_RUNTIME, format!("cannot create {}: {e}", out.display()));
    }
    eprintln!("{} runs on {} training / {} test samples", specs.len(), train.len(), test.len());

    let save_errors = Mutex::new(Vec::new());
    let results = run_sweep(&specs, &train, &test, options.threads, |i, record, net| {
        let status = if record.failed { "diverged" } else { "done" };
        eprintln!("run {i}: {} seed {} {status}", record.config.rule.kind, record.config.seed);
        if config.checkpoints {
            if let Err(e) = save_checkpoint(net, ckpt_dir.join(checkpoint_name(i, record))) {
                save_errors.lock().expect("unpoisoned").push(e.to_string());
            }
        }
    });
    let results = match results {
        Ok(r) => r,
        Err(e) => return fail(EXIT_RUNTIME, e),
    };

    let mut records = Vec::new();
    let mut failures = save_errors.into_inner().expect("unpoisoned");
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(record) => {
                if let Some(why) = &record.failure {
                    failures.push(format!("run {i}: {why}"));
                }
                records.push(record);
            }
            Err(e) => failures.push(format!("run {i}: {e}")),
        }
    }
    if let Err(e) = write_outputs(&out, &records) {
        return fail(EXIT_RUNTIME, e);
    }
    print_summary(&records);
    if failures.is_empty() {
        EXIT_OK
    } else {
        for f in &failures {
            eprintln!("error: {f}");
        }
        EXIT_RUNTIME
    }
}

/// Renders the first-layer filters of a checkpoint as a PPM image.
pub fn cmd_filters(checkpoint: &Path, out: &Path) -> i32 {
    let net = match load_checkpoint(checkpoint) {
        Ok(n) => n,
        Err(e) => return fail(EXIT_RUNTIME, e),
    };
    let image = match render_first_layer(&net) {
        Ok(i) => i,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    match File::create(out).and_then(|mut f| f.write_all(&image)) {
        Ok(()) => EXIT_OK,
        Err(e) => fail(EXIT_RUNTIME, format!("cannot write {}: {e}", out.display())),
    }
}

/// Aggregates a runs file into per-epoch mean and standard deviation curves.
pub fn cmd_curves(jsonl: &Path, out: &Path) -> i32 {
    let file = match File::open(jsonl) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_USAGE, format!("cannot read {}: {e}", jsonl.display())),
    };
    let records = match read_jsonl(BufReader::new(file)) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", jsonl.display())),
    };
    if records.is_empty() {
        return fail(EXIT_USAGE, format!("{} holds no runs", jsonl.display()));
    }
    let written = File::create(out)
        .map_err(biolearn::Error::from)
        .and_then(|f| write_curves_csv(&records, BufWriter::new(f)));
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => fail(EXIT_RUNTIME, format!("cannot write {}: {e}", out.display())),
    }
}
