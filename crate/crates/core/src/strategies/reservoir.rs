use rand::{Rng, RngCore};

use super::{MemoryStrategy, StrategyKind, TaskDataset};
use crate::error::Result;
use crate::memory::ReplayMemory;
use crate::sample::MultiLabelSample;

/// Classic reservoir sampling step. `seen` counts this sample (1-based).
pub fn reservoir_update<R: Rng + ?Sized>(
    memory: &mut ReplayMemory,
    sample: MultiLabelSample,
    seen: u64,
    rng: &mut R,
) -> Result<()> {
    if memory.len() < memory.capacity() {
        return memory.push(sample);
    }
    let slot = rng.random_range(0..seen.max(1));
    if slot < memory.capacity() as u64 {
        memory.replace(slot as usize, sample)?;
    }
    Ok(())
}

/// Reservoir Sampling over the concatenated task stream, ignoring task ids.
#[derive(Debug, Clone)]
pub struct Reservoir {
    memory: ReplayMemory,
    seen: u64,
}

impl Reservoir {
    pub fn new(memory_size: usize, num_labels: usize) -> Self {
        Self {
            memory: ReplayMemory::new(memory_size, num_labels),
            seen: 0,
        }
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }
}

impl MemoryStrategy for Reservoir {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Reservoir
    }

    fn observe_task(&mut self, task: &TaskDataset, rng: &mut dyn RngCore) -> Result<()> {
        for sample in &task.train {
            self.seen += 1;
            reservoir_update(&mut self.memory, sample.clone(), self.seen, rng)?;
        }
        Ok(())
    }

    fn replay_pool(&self) -> Vec<&MultiLabelSample> {
        self.memory.samples().iter().collect()
    }

    fn eval_count(&self) -> u64 {
        0
    }
}
