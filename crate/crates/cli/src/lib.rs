//! File formats, benchmark generation and run orchestration for `destflow`.

pub mod benchmark;
pub mod error;
pub mod netfile;
pub mod output;
pub mod run;
pub mod scenario;

pub use error::{CliError, Result};
pub use run::{run_scenario, write_outputs, Behavior, Outcome};
