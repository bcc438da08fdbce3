use rand::seq::index;
use rand::{Rng, RngCore};

use super::{MemoryStrategy, StrategyKind, StrategyParams, StrategyReport, TaskDataset, TaskStream};
use crate::distribution::{target_distribution, TargetSpec};
use crate::error::{Error, Result};
use crate::memory::{memory_update, ReplayMemory};
use crate::sample::MultiLabelSample;

/// Streams `dataset` into `memory` one batch at a time.
///
/// While the memory is below its capacity, a random subset of the batch fills
/// the gap. Any batch remainder is merged in and the same number of samples is
/// removed again with [`memory_update`], using a target computed from the
/// merged counts.
pub fn ocdm_task_update<R: Rng + ?Sized>(
    dataset: &[MultiLabelSample],
    memory: &mut ReplayMemory,
    batch_size: usize,
    target: &TargetSpec,
    rng: &mut R,
) -> Result<()> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1".into()));
    }
    for chunk in dataset.chunks(batch_size) {
        let mut batch: Vec<MultiLabelSample> = chunk.to_vec();

        let gap = memory.capacity().saturating_sub(memory.len());
        if gap > 0 {
            let take = gap.min(batch.len());
            let mut picked = index::sample(rng, batch.len(), take).into_vec();
            picked.sort_unstable();
            // Remove from the back so earlier indices stay valid.
            let mut selected: Vec<_> = picked.iter().rev().map(|&i| batch.remove(i)).collect();
            selected.reverse();
            memory.extend(selected)?;
        }

        if !batch.is_empty() {
            let removals = batch.len();
            memory.extend(batch)?;
            let target = target_distribution(memory.counts(), target)?;
            memory_update(memory, removals, &target)?;
        }
    }
    Ok(())
}

/// Optimizing Class Distribution in Memory: one memory of size M shared by
/// all tasks, updated batch by batch.
#[derive(Debug, Clone)]
pub struct Ocdm {
    memory: ReplayMemory,
    batch_size: usize,
    target: TargetSpec,
}

impl Ocdm {
    pub fn new(params: &StrategyParams, num_labels: usize) -> Self {
        Self {
            memory: ReplayMemory::new(params.memory_size, num_labels).with_epsilon(params.target.epsilon),
            batch_size: params.batch_size,
            target: params.target,
        }
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }
}

impl MemoryStrategy for Ocdm {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Ocdm
    }

    fn observe_task(&mut self, task: &TaskDataset, rng: &mut dyn RngCore) -> Result<()> {
        ocdm_task_update(&task.train, &mut self.memory, self.batch_size, &self.target, rng)
    }

    fn replay_pool(&self) -> Vec<&MultiLabelSample> {
        self.memory.samples().iter().collect()
    }

    fn eval_count(&self) -> u64 {
        self.memory.eval_count()
    }
}

pub fn ocdm_run(
    stream: &TaskStream,
    memory_size: usize,
    batch_size: usize,
    rho: f64,
    rng: &mut dyn RngCore,
) -> Result<StrategyReport> {
    if memory_size == 0 {
        return Err(Error::InvalidConfig("memory size must be at least 1".into()));
    }
    let params = StrategyParams {
        memory_size,
        batch_size,
        target: TargetSpec::with_rho(rho),
    };
    let mut strategy = Ocdm::new(&params, stream.num_labels());
    super::run_strategy(&mut strategy, stream, rng)
}
