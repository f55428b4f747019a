//! Library side of the experiment harness: file formats, experiment
//! configuration, and execution. The `lapi` binary is a thin front end over
//! these modules.

pub mod error;
pub mod experiment;
pub mod format;
pub mod spec;

pub use crate::error::{CliError, Result};
pub use crate::experiment::{run_experiment, ExperimentOutcome};
pub use crate::spec::ExperimentSpec;
