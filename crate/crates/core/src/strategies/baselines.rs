use rand::RngCore;

use super::{MemoryStrategy, StrategyKind, TaskDataset, TrainingMode};
use crate::error::Result;
use crate::sample::MultiLabelSample;

/// Lower bound: no memory, the model sees only the current task.
#[derive(Debug, Clone, Copy, Default)]
pub struct Finetune;

impl MemoryStrategy for Finetune {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Finetune
    }

    fn observe_task(&mut self, _task: &TaskDataset, _rng: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }

    fn replay_pool(&self) -> Vec<&MultiLabelSample> {
        Vec::new()
    }

    fn eval_count(&self) -> u64 {
        0
    }

    fn training_mode(&self) -> TrainingMode {
        TrainingMode::CurrentTaskOnly
    }
}

/// Upper bound: an unbounded memory holding every training sample seen.
#[derive(Debug, Clone, Default)]
pub struct Cumulative {
    seen: Vec<MultiLabelSample>,
}

impl MemoryStrategy for Cumulative {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Cumulative
    }

    fn observe_task(&mut self, task: &TaskDataset, _rng: &mut dyn RngCore) -> Result<()> {
        self.seen.extend(task.train.iter().cloned());
        Ok(())
    }

    fn replay_pool(&self) -> Vec<&MultiLabelSample> {
        self.seen.iter().collect()
    }

    fn eval_count(&self) -> u64 {
        0
    }

    fn training_mode(&self) -> TrainingMode {
        TrainingMode::AllSeen
    }
}
