//! Rehearsal memory strategies.
//!
//! Every strategy implements [`MemoryStrategy`]: it observes one task dataset
//! at a time and exposes the pool of stored samples used for replay. The
//! label-balancing strategies (OCDM, Dataset-based OCDM, BAT-OCDM) are built on
//! [`memory_update`](crate::memory::memory_update); Reservoir Sampling and
//! Task-based Random select at random; Finetune and Cumulative are the
//! degenerate no-memory and unbounded-memory baselines.

mod baselines;
mod bat_ocdm;
mod batch;
mod dataset_ocdm;
mod ocdm;
mod reservoir;
mod task_random;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distribution::{LabelCounts, TargetSpec};
use crate::error::{Error, Result};
use crate::sample::MultiLabelSample;

pub use baselines::{Cumulative, Finetune};
pub use bat_ocdm::{bat_ocdm_run, BatOcdm};
pub use batch::compose_training_batch;
pub use dataset_ocdm::{db_ocdm_run, DatasetOcdm};
pub use ocdm::{ocdm_run, ocdm_task_update, Ocdm};
pub use reservoir::{reservoir_update, Reservoir};
pub use task_random::{task_random_run, TaskRandom};

/// Training and test samples of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDataset {
    pub task_id: u32,
    pub train: Vec<MultiLabelSample>,
    pub test: Vec<MultiLabelSample>,
}

/// An ordered sequence of tasks sharing one label universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStream {
    tasks: Vec<TaskDataset>,
    num_labels: usize,
    num_features: usize,
}

impl TaskStream {
    /// Validates that task ids run `1..=T`, that every sample carries its
    /// task's id and that label and feature widths are shared.
    pub fn new(tasks: Vec<TaskDataset>, num_labels: usize, num_features: usize) -> Result<Self> {
        for (i, task) in tasks.iter().enumerate() {
            let expected = i as u32 + 1;
            if task.task_id != expected {
                return Err(Error::InvalidConfig(format!(
                    "task ids must be consecutive from 1, found {} at position {}",
                    task.task_id, i
                )));
            }
            for s in task.train.iter().chain(&task.test) {
                if s.task_id != expected {
                    return Err(Error::InvalidConfig(format!(
                        "sample {} carries task id {} inside task {}",
                        s.sample_id, s.task_id, expected
                    )));
                }
                if s.labels.len() != num_labels {
                    return Err(Error::DimensionMismatch {
                        expected: num_labels,
                        actual: s.labels.len(),
                    });
                }
                if s.features.len() != num_features {
                    return Err(Error::DimensionMismatch {
                        expected: num_features,
                        actual: s.features.len(),
                    });
                }
            }
        }
        Ok(Self {
            tasks,
            num_labels,
            num_features,
        })
    }

    pub fn tasks(&self) -> &[TaskDataset] {
        &self.tasks
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// The first `n` tasks as a new stream.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            tasks: self.tasks[..n.min(self.tasks.len())].to_vec(),
            num_labels: self.num_labels,
            num_features: self.num_features,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Finetune,
    Cumulative,
    TaskRandom,
    Reservoir,
    Ocdm,
    DbOcdm,
    BatOcdm,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::Finetune,
        StrategyKind::Cumulative,
        StrategyKind::TaskRandom,
        StrategyKind::Reservoir,
        StrategyKind::Ocdm,
        StrategyKind::DbOcdm,
        StrategyKind::BatOcdm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Finetune => "finetune",
            StrategyKind::Cumulative => "cumulative",
            StrategyKind::TaskRandom => "task_random",
            StrategyKind::Reservoir => "reservoir",
            StrategyKind::Ocdm => "ocdm",
            StrategyKind::DbOcdm => "db_ocdm",
            StrategyKind::BatOcdm => "bat_ocdm",
        }
    }

    /// Whether the strategy keeps a bounded replay memory.
    pub fn is_replay(self) -> bool {
        !matches!(self, StrategyKind::Finetune | StrategyKind::Cumulative)
    }

    pub fn build(self, params: &StrategyParams, num_labels: usize) -> Box<dyn MemoryStrategy + Send> {
        match self {
            StrategyKind::Finetune => Box::new(Finetune),
            StrategyKind::Cumulative => Box::new(Cumulative::default()),
            StrategyKind::TaskRandom => Box::new(TaskRandom::new(params.memory_size, num_labels)),
            StrategyKind::Reservoir => Box::new(Reservoir::new(params.memory_size, num_labels)),
            StrategyKind::Ocdm => Box::new(Ocdm::new(params, num_labels)),
            StrategyKind::DbOcdm => Box::new(DatasetOcdm::new(params, num_labels)),
            StrategyKind::BatOcdm => Box::new(BatOcdm::new(params, num_labels)),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    /// Total memory size M.
    pub memory_size: usize,
    /// Batch size used by OCDM-style per-batch memory updates.
    pub batch_size: usize,
    pub target: TargetSpec,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            memory_size: 2000,
            batch_size: 32,
            target: TargetSpec::default(),
        }
    }
}

/// How a strategy's model is trained on a new task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingMode {
    /// New-task batches mixed with samples replayed from memory.
    Replay,
    /// From scratch on the current task only.
    CurrentTaskOnly,
    /// From scratch on every training sample seen so far.
    AllSeen,
}

pub trait MemoryStrategy {
    fn kind(&self) -> StrategyKind;

    /// Updates the memory with the training data of the next task.
    fn observe_task(&mut self, task: &TaskDataset, rng: &mut dyn RngCore) -> Result<()>;

    /// Samples currently available for replay.
    fn replay_pool(&self) -> Vec<&MultiLabelSample>;

    /// KL evaluations performed so far.
    fn eval_count(&self) -> u64;

    fn training_mode(&self) -> TrainingMode {
        TrainingMode::Replay
    }
}

/// Outcome of running one strategy over a whole stream in memory-only mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: StrategyKind,
    pub final_memory: Vec<MultiLabelSample>,
    pub evals_per_task: Vec<u64>,
    pub seconds_per_task: Vec<f64>,
}

impl StrategyReport {
    pub fn total_evals(&self) -> u64 {
        self.evals_per_task.iter().sum()
    }

    pub fn label_counts(&self, num_labels: usize) -> Result<LabelCounts> {
        LabelCounts::from_samples(num_labels, &self.final_memory)
    }

    /// Stored samples per task id `1..=num_tasks`.
    pub fn task_counts(&self, num_tasks: usize) -> Vec<usize> {
        task_counts(self.final_memory.iter(), num_tasks)
    }
}

pub(crate) fn task_counts<'a, I>(samples: I, num_tasks: usize) -> Vec<usize>
where
    I: IntoIterator<Item = &'a MultiLabelSample>,
{
    let mut counts = vec![0; num_tasks];
    for s in samples {
        if let Some(c) = (s.task_id as usize).checked_sub(1).and_then(|i| counts.get_mut(i)) {
            *c += 1;
        }
    }
    counts
}

/// Feeds every task of `stream` to `strategy`, recording the per-task KL
/// evaluation count and wall time of the memory handling.
pub fn run_strategy(
    strategy: &mut dyn MemoryStrategy,
    stream: &TaskStream,
    rng: &mut dyn RngCore,
) -> Result<StrategyReport> {
    let mut evals_per_task = Vec::with_capacity(stream.num_tasks());
    let mut seconds_per_task = Vec::with_capacity(stream.num_tasks());
    for task in stream.tasks() {
        let before = strategy.eval_count();
        let start = Instant::now();
        strategy.observe_task(task, rng)?;
        seconds_per_task.push(start.elapsed().as_secs_f64());
        evals_per_task.push(strategy.eval_count() - before);
    }
    Ok(StrategyReport {
        strategy: strategy.kind(),
        final_memory: strategy.replay_pool().into_iter().cloned().collect(),
        evals_per_task,
        seconds_per_task,
    })
}

/// Splits `memory_size` across `tasks` partitions: the first
/// `memory_size % tasks` partitions get one extra slot.
pub fn task_quotas(memory_size: usize, tasks: usize) -> Result<Vec<usize>> {
    if tasks == 0 || memory_size < tasks {
        return Err(Error::QuotaZero {
            memory: memory_size,
            tasks,
        });
    }
    let base = memory_size / tasks;
    let extra = memory_size % tasks;
    Ok((0..tasks).map(|i| base + usize::from(i < extra)).collect())
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quota_examples() {
        assert_eq!(task_quotas(6, 3).unwrap(), vec![2, 2, 2]);
        assert_eq!(task_quotas(2000, 3).unwrap(), vec![667, 667, 666]);
        assert_eq!(task_quotas(10, 2).unwrap(), vec![5, 5]);
        assert!(matches!(task_quotas(2, 3), Err(Error::QuotaZero { .. })));
        assert!(task_quotas(5, 0).is_err());
    }

    #[test]
    fn names_round_trip() {
        for kind in StrategyKind::ALL {
            assert_eq!(kind.name().parse::<StrategyKind>().unwrap(), kind);
        }
        assert!("prs".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn stream_validation() {
        let ok = fixtures::label_stream(&[vec![vec![0]], vec![vec![1]]], 2);
        assert_eq!(ok.num_tasks(), 2);

        let mut tasks = ok.tasks().to_vec();
        tasks[1].task_id = 3;
        assert!(TaskStream::new(tasks, 2, 0).is_err());

        let mut tasks = ok.tasks().to_vec();
        tasks[0].train[0].task_id = 2;
        assert!(TaskStream::new(tasks, 2, 0).is_err());
    }
}
