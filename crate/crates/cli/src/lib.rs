//! Experiment harness for adaptive speculative decoding: model training,
//! comparison runs across decoding methods, and trace analysis.

pub mod analyze;
pub mod compare;
pub mod config;
pub mod run;
pub mod train;

pub use analyze::cmd_analyze;
pub use compare::cmd_compare;
pub use config::ExperimentConfig;
pub use run::{cmd_run, RunOutcome, SummaryRow};
pub use train::cmd_train;
