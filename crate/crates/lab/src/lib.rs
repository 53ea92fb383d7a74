pub mod config;
pub mod runner;
pub mod trace;

pub use config::{ExperimentConfig, Setup};
pub use runner::{prepare, run_experiment, run_repetition, Experiment, ExperimentSummary};
pub use trace::emit_trace;
