use std::collections::HashSet;

use rand::RngCore;

use super::{MemoryStrategy, StrategyKind, StrategyParams, StrategyReport, TaskDataset, TaskStream};
use crate::distribution::{target_distribution, TargetSpec};
use crate::error::{Error, Result};
use crate::memory::{memory_update, ReplayMemory};
use crate::sample::MultiLabelSample;

/// Dataset-based OCDM: merges a whole task dataset into the memory and runs a
/// single greedy update that restores the memory to exactly M samples.
#[derive(Debug, Clone)]
pub struct DatasetOcdm {
    memory: ReplayMemory,
    target: TargetSpec,
}

impl DatasetOcdm {
    pub fn new(params: &StrategyParams, num_labels: usize) -> Self {
        Self {
            memory: ReplayMemory::new(params.memory_size, num_labels).with_epsilon(params.target.epsilon),
            target: params.target,
        }
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }
}

impl MemoryStrategy for DatasetOcdm {
    fn kind(&self) -> StrategyKind {
        StrategyKind::DbOcdm
    }

    fn observe_task(&mut self, task: &TaskDataset, _rng: &mut dyn RngCore) -> Result<()> {
        let mut present: HashSet<u64> = self.memory.samples().iter().map(|s| s.sample_id).collect();
        for sample in &task.train {
            if present.insert(sample.sample_id) {
                self.memory.push(sample.clone())?;
            }
        }
        let surplus = self.memory.len().saturating_sub(self.memory.capacity());
        if surplus > 0 {
            let target = target_distribution(self.memory.counts(), &self.target)?;
            memory_update(&mut self.memory, surplus, &target)?;
        }
        Ok(())
    }

    fn replay_pool(&self) -> Vec<&MultiLabelSample> {
        self.memory.samples().iter().collect()
    }

    fn eval_count(&self) -> u64 {
        self.memory.eval_count()
    }
}

pub fn db_ocdm_run(
    stream: &TaskStream,
    memory_size: usize,
    rho: f64,
    rng: &mut dyn RngCore,
) -> Result<StrategyReport> {
    if memory_size == 0 {
        return Err(Error::InvalidConfig("memory size must be at least 1".into()));
    }
    let params = StrategyParams {
        memory_size,
        batch_size: 1,
        target: TargetSpec::with_rho(rho),
    };
    let mut strategy = DatasetOcdm::new(&params, stream.num_labels());
    super::run_strategy(&mut strategy, stream, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{empirical_distribution, kl_distance, LabelDistribution, DEFAULT_EPSILON};
    use crate::strategies::fixtures::label_stream;
    use crate::strategies::ocdm_run;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kl_to_uniform(samples: &[MultiLabelSample], num_labels: usize) -> f64 {
        let counts = crate::distribution::LabelCounts::from_samples(num_labels, samples).unwrap();
        let p = empirical_distribution(&counts, DEFAULT_EPSILON);
        kl_distance(&p, &LabelDistribution::uniform(num_labels)).unwrap()
    }

    #[test]
    fn small_dataset_is_kept_whole() {
        let stream = label_stream(&[vec![vec![0], vec![1], vec![0]]], 2);
        let report = db_ocdm_run(&stream, 5, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(report.final_memory.len(), 3);
        assert_eq!(report.total_evals(), 0);
    }

    #[test]
    fn not_worse_than_batch_ocdm_on_tiny_stream() {
        let stream = label_stream(&[vec![vec![0], vec![0], vec![1], vec![1]]], 2);
        let db = db_ocdm_run(&stream, 2, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let batched = ocdm_run(&stream, 2, 2, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(kl_to_uniform(&db.final_memory, 2) <= kl_to_uniform(&batched.final_memory, 2));
    }

    #[test]
    fn per_task_cost_matches_closed_form() {
        // Task 1 (D = 30) fills M = 10 with m = 30, b = 20. Later tasks start
        // full: m = M + D = 40, b = D = 30.
        let tasks: Vec<Vec<Vec<usize>>> = (0..3)
            .map(|t| (0..30).map(|i| vec![(i + t) % 3]).collect())
            .collect();
        let stream = label_stream(&tasks, 3);
        let report = db_ocdm_run(&stream, 10, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mu = |m: u64, b: u64| (0..b).map(|k| m - k).sum::<u64>();
        assert_eq!(report.evals_per_task, vec![mu(30, 20), mu(40, 30), mu(40, 30)]);
        assert_eq!(report.final_memory.len(), 10);
    }

    #[test]
    fn duplicate_ids_are_merged_once() {
        let stream = label_stream(&[vec![vec![0], vec![1]]], 2);
        let mut s = DatasetOcdm::new(&StrategyParams { memory_size: 5, ..Default::default() }, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        s.observe_task(&stream.tasks()[0], &mut rng).unwrap();
        s.observe_task(&stream.tasks()[0], &mut rng).unwrap();
        assert_eq!(s.memory().len(), 2);
    }
}
