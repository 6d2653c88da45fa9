//! Experiment harnesses and file handling behind the `krv` command.

pub mod error;
pub mod pairs;
pub mod suite;
pub mod synth;

pub use error::{CliError, Result};
