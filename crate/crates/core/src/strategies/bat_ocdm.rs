use rand::RngCore;

use super::{
    ocdm_task_update, task_quotas, MemoryStrategy, StrategyKind, StrategyParams, StrategyReport, TaskDataset,
    TaskStream,
};
use crate::distribution::{target_distribution, TargetSpec};
use crate::error::Result;
use crate::memory::{memory_update, ReplayMemory};
use crate::sample::MultiLabelSample;

/// Balanced Among Tasks OCDM.
///
/// Keeps one memory per task. When task `N` arrives it gets a fresh partition
/// of size `quota_N`, filled with [`ocdm_task_update`]; every older partition
/// is then shrunk to its new quota with [`memory_update`]. Quotas follow
/// [`task_quotas`], so they always sum to M and differ by at most one.
#[derive(Debug, Clone)]
pub struct BatOcdm {
    partitions: Vec<ReplayMemory>,
    memory_size: usize,
    batch_size: usize,
    num_labels: usize,
    target: TargetSpec,
}

impl BatOcdm {
    pub fn new(params: &StrategyParams, num_labels: usize) -> Self {
        Self {
            partitions: Vec::new(),
            memory_size: params.memory_size,
            batch_size: params.batch_size,
            num_labels,
            target: params.target,
        }
    }

    /// Per-task memories in task order.
    pub fn partitions(&self) -> &[ReplayMemory] {
        &self.partitions
    }

    pub fn stored_len(&self) -> usize {
        self.partitions.iter().map(ReplayMemory::len).sum()
    }
}

impl MemoryStrategy for BatOcdm {
    fn kind(&self) -> StrategyKind {
        StrategyKind::BatOcdm
    }

    fn observe_task(&mut self, task: &TaskDataset, rng: &mut dyn RngCore) -> Result<()> {
        let tasks_seen = self.partitions.len() + 1;
        let quotas = task_quotas(self.memory_size, tasks_seen)?;

        let mut fresh = ReplayMemory::new(quotas[tasks_seen - 1], self.num_labels).with_epsilon(self.target.epsilon);
        ocdm_task_update(&task.train, &mut fresh, self.batch_size, &self.target, rng)?;

        for (memory, &quota) in self.partitions.iter_mut().zip(&quotas) {
            memory.set_capacity(quota);
            let surplus = memory.len().saturating_sub(quota);
            if surplus > 0 {
                let target = target_distribution(memory.counts(), &self.target)?;
                memory_update(memory, surplus, &target)?;
            }
        }
        self.partitions.push(fresh);
        Ok(())
    }

    fn replay_pool(&self) -> Vec<&MultiLabelSample> {
        self.partitions.iter().flat_map(|m| m.samples()).collect()
    }

    fn eval_count(&self) -> u64 {
        self.partitions.iter().map(ReplayMemory::eval_count).sum()
    }
}

pub fn bat_ocdm_run(
    stream: &TaskStream,
    memory_size: usize,
    batch_size: usize,
    rho: f64,
    rng: &mut dyn RngCore,
) -> Result<StrategyReport> {
    let params = StrategyParams {
        memory_size,
        batch_size,
        target: TargetSpec::with_rho(rho),
    };
    let mut strategy = BatOcdm::new(&params, stream.num_labels());
    super::run_strategy(&mut strategy, stream, rng)
}
