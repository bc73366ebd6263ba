//! Experiment harness for `rydpump`: configuration loading, figure
//! reproductions and CSV/JSON output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

pub use config::{load_config, preset, ExperimentConfig};
pub use error::CliError;
pub use table::ResultTable;
