//! Experiment harness for the rehearsal-memory strategies: configuration,
//! result bundles, frequency-group metrics and the cost scaling probe.

pub mod config;
pub mod error;
pub mod experiment;
pub mod groups;
pub mod ingest;
pub mod scaling;

pub use config::{ExperimentConfig, LabelGroup};
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, run_single, run_strategies, MemoryReport, RunMetrics, StrategyRun};
pub use groups::{frequency_group_metrics, GroupMetrics};
pub use scaling::{fit_through_origin, scaling_probe, ScalingReport, ScalingRow};
