//! Headless pipeline over storyline documents: import, extract, layout,
//! render and report, one subcommand per step.

mod error;
pub mod fuzz;
pub mod pipeline;

pub use error::CliError;
