//! Pipeline behind the `ineqpanel` command: institution clustering,
//! unit-root battery, EGLS estimation and residual diagnostics, with text,
//! CSV and JSON reports and a run manifest.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod reference;
pub mod report;

pub use config::{Format, RunConfig};
pub use error::{CliError, ExitStatus, Result};
pub use pipeline::{cmd_cluster, cmd_diagnose, cmd_estimate, cmd_replicate, cmd_simulate, cmd_unitroot, CommandOutput};
