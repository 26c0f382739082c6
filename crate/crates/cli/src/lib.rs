//! Experiment runner around `tdm-core`: JSON configs in, ROC CSVs and a
//! JSON report out.
//!
//! Output files (all in the configured output directory):
//!
//! - `report.json`: schedule, objective trace, detector figures, timings and
//!   the fully defaulted config.
//! - `roc_<label>.csv`: columns `threshold,pfa,pd`, one row per threshold.
//! - `roc_<label>.json`: seed, trial count, scenario hash and alpha model of
//!   the matching CSV.

pub mod config;
pub mod error;
pub mod experiment;

pub use config::{build_scenario, load_config, parse_config_str, ConfigError, ExperimentConfig, Mode};
pub use error::CliError;
pub use experiment::{run, ExperimentReport, Overrides};
