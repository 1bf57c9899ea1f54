//! Experiment harness over `bethe-core`: JSON experiment configs, the named
//! experiments, and deterministic CSV output.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{load_config, parse_config, ExperimentKind, ExperimentSpec, Grid, ModelDesc};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, ExperimentRows};
pub use output::{write_results, write_rows, Row};
