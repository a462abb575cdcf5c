//! Command-line harness for `fleetsample`: training, team simulations,
//! communication-range sweeps and path smoothing, with plain-text
//! configuration and CSV outputs.

pub mod commands;
pub mod config;
pub mod fields;
pub mod io;

pub use commands::{cmd_simulate, cmd_smooth, cmd_sweep, cmd_train};
pub use config::{ExperimentConfig, FieldSource, PolicyKind, UsageError};
