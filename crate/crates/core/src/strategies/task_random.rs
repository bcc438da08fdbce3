use rand::seq::index;
use rand::{Rng, RngCore};

use super::{task_quotas, MemoryStrategy, StrategyKind, StrategyReport, TaskDataset, TaskStream};
use crate::error::Result;
use crate::memory::ReplayMemory;
use crate::sample::MultiLabelSample;

/// Task-based Random: one equal-quota partition per task, filled and shrunk
/// by uniform random selection.
#[derive(Debug, Clone)]
pub struct TaskRandom {
    partitions: Vec<ReplayMemory>,
    memory_size: usize,
    num_labels: usize,
}

impl TaskRandom {
    pub fn new(memory_size: usize, num_labels: usize) -> Self {
        Self {
            partitions: Vec::new(),
            memory_size,
            num_labels,
        }
    }

    pub fn partitions(&self) -> &[ReplayMemory] {
        &self.partitions
    }
}

impl MemoryStrategy for TaskRandom {
    fn kind(&self) -> StrategyKind {
        StrategyKind::TaskRandom
    }

    fn observe_task(&mut self, task: &TaskDataset, rng: &mut dyn RngCore) -> Result<()> {
        let tasks_seen = self.partitions.len() + 1;
        let quotas = task_quotas(self.memory_size, tasks_seen)?;

        let quota = quotas[tasks_seen - 1];
        let mut fresh = ReplayMemory::new(quota, self.num_labels);
        let mut picked = index::sample(rng, task.train.len(), quota.min(task.train.len())).into_vec();
        picked.sort_unstable();
        fresh.extend(picked.into_iter().map(|i| task.train[i].clone()))?;

        for (memory, &quota) in self.partitions.iter_mut().zip(&quotas) {
            memory.set_capacity(quota);
            while memory.len() > quota {
                let victim = rng.random_range(0..memory.len());
                memory.remove_at(victim);
            }
        }
        self.partitions.push(fresh);
        Ok(())
    }

    fn replay_pool(&self) -> Vec<&MultiLabelSample> {
        self.partitions.iter().flat_map(|m| m.samples()).collect()
    }

    fn eval_count(&self) -> u64 {
        0
    }
}

pub fn task_random_run(stream: &TaskStream, memory_size: usize, rng: &mut dyn RngCore) -> Result<StrategyReport> {
    let mut strategy = TaskRandom::new(memory_size, stream.num_labels());
    super::run_strategy(&mut strategy, stream, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::strategies::fixtures::label_stream;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stream(tasks: usize, per_task: usize) -> TaskStream {
        let tasks: Vec<Vec<Vec<usize>>> = (0..tasks).map(|t| (0..per_task).map(|i| vec![(i + t) % 2]).collect()).collect();
        label_stream(&tasks, 2)
    }

    #[test]
    fn equal_split_for_two_tasks() {
        let report = task_random_run(&stream(2, 20), 10, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(report.task_counts(2), vec![5, 5]);
    }

    #[test]
    fn balance_within_one() {
        let report = task_random_run(&stream(7, 30), 50, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let counts = report.task_counts(7);
        assert!(counts.iter().all(|&c| c == 7 || c == 8), "{counts:?}");
        assert_eq!(counts.iter().sum::<usize>(), 50);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = task_random_run(&stream(4, 25), 12, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = task_random_run(&stream(4, 25), 12, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a.final_memory, b.final_memory);
    }

    #[test]
    fn quota_zero() {
        assert!(matches!(
            task_random_run(&stream(3, 4), 2, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::QuotaZero { .. })
        ));
    }
}
