//! Configuration loading, task execution and figure data for `floquet-flow`.

pub mod config;
pub mod error;
pub mod figures;
pub mod runner;

pub use config::{load_config, load_config_str, load_config_with, parse_override, Engine, Figure, RunConfig, Task};
pub use error::{CliError, CliResult};
pub use figures::emit_figure;
pub use runner::{evaluate_config, run, DataTable, Evaluation, RunOutput};
