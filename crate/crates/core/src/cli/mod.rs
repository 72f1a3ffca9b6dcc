//! Configuration, orchestration and reporting for the `sausage` binary.

pub mod config;
pub mod output;
pub mod report;
pub mod run;

pub use config::{Experiment, ExperimentConfig, KINDS};
pub use output::{ResultManifest, ReportPoint, TaskFailure};
pub use report::{report, ReportSummary};
pub use run::{execute, run, run_to, with_workers, ExperimentOutput, RunOutcome, WORKERS_ENV};
