//! Batch runner: configuration, experiment modes, and CSV/JSON/SVG output.

pub mod config;
pub mod plots;
pub mod records;
pub mod run;

pub use config::{EpsRange, ExperimentConfig, Intent, Mode};
pub use run::{run, RegimeRejection, RunSummary};
