//! Batch front end: TOML experiment configs in, `report.json` plus CSV and
//! field files out.

pub mod config;
pub mod error;
pub mod run;

pub use config::{Command, ExperimentConfig};
pub use error::{CliError, CliResult};
pub use run::{run, Outcome};
