//! Label-distribution-aware rehearsal memory for continual multi-label learning.
//!
//! The memory keeps its label distribution close to a target by greedily
//! removing the samples whose removal most reduces the KL distance to it.
//! [`strategies`] builds OCDM, Dataset-based OCDM and the task-balanced
//! BAT-OCDM on top of that update, alongside random and degenerate baselines.

pub mod data;
pub mod distribution;
pub mod error;
pub mod memory;
pub mod metrics;
pub mod model;
pub mod sample;
pub mod strategies;

pub use distribution::{
    counts_without_sample, empirical_distribution, kl_distance, target_distribution, LabelCounts,
    LabelDistribution, TargetSpec, DEFAULT_EPSILON,
};
pub use error::{Error, Result};
pub use memory::{memory_update, memory_update_cost, ReplayMemory, TIE_TOLERANCE};
pub use sample::{n_hot, MultiLabelSample};
pub use strategies::{
    run_strategy, task_quotas, MemoryStrategy, StrategyKind, StrategyParams, StrategyReport, TaskDataset,
    TaskStream, TrainingMode,
};
