//! Command-line front end for the `biolearn` benchmark harness.
//!
//! Everything the `biolearn` binary does is reachable from here: parsing
//! experiment files, running sweeps, and emitting curves and filter images.

pub mod commands;
pub mod config;
pub mod ppm;

pub use commands::{cmd_curves, cmd_filters, cmd_run, RunOptions, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
pub use config::{ConfigError, DatasetConfig, DatasetKind, ExperimentConfig, RuleSettings, SweepAxes};
pub use ppm::{render_filter_grid, render_first_layer, DEGENERATE_GRAY};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
