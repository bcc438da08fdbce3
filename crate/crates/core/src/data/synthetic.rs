//! Synthetic domain-incremental multi-label streams.
//!
//! Every task shares one label set but draws labels from its own marginal
//! profile, and maps labels to features through a blend of a shared
//! per-label direction and a task-specific one. Features are non-negative
//! and normalized to sum to one, like normalized alarm counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::MultiLabelSample;
use crate::strategies::{TaskDataset, TaskStream};

/// Label groups by frequency for the 15-label alarm setup.
pub const HIGH_FREQ_LABELS: [usize; 4] = [4, 6, 7, 13];
pub const MEDIUM_FREQ_LABELS: [usize; 5] = [0, 3, 5, 8, 14];
pub const LOW_FREQ_LABELS: [usize; 6] = [1, 2, 9, 10, 11, 12];

/// Features that carry each label's signal.
const SIGNATURE_FEATURES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub tasks: usize,
    pub train_per_task: usize,
    pub test_per_task: usize,
    pub num_labels: usize,
    pub num_features: usize,
    /// Per-task label marginals, `tasks x num_labels`.
    pub label_profiles: Vec<Vec<f64>>,
    /// Weight in `[0, 1]` of the task-specific label directions.
    pub task_shift: f64,
    /// Standard deviation of the additive feature noise.
    pub noise: f64,
    pub seed: u64,
}

impl StreamConfig {
    /// Every task uses the same marginal `p` for every label.
    pub fn uniform(tasks: usize, train_per_task: usize, num_labels: usize, num_features: usize, p: f64, seed: u64) -> Self {
        Self {
            tasks,
            train_per_task,
            test_per_task: 0,
            num_labels,
            num_features,
            label_profiles: vec![vec![p; num_labels]; tasks],
            task_shift: 0.5,
            noise: 0.05,
            seed,
        }
    }

    /// Label 0 is `skew` times more frequent than the others, whose base
    /// marginal is `base`. Each task jitters every marginal by a factor drawn
    /// from `[1 - variation, 1 + variation]`.
    #[allow(clippy::too_many_arguments)]
    pub fn skewed(
        tasks: usize,
        train_per_task: usize,
        num_labels: usize,
        num_features: usize,
        base: f64,
        skew: f64,
        variation: f64,
        seed: u64,
    ) -> Self {
        let mut profile = vec![base; num_labels];
        profile[0] = (base * skew).min(1.0);
        let mut config = Self::uniform(tasks, train_per_task, num_labels, num_features, base, seed);
        config.label_profiles = jittered_profiles(&profile, tasks, variation, seed);
        config
    }

    /// 15 labels in high / medium / low frequency groups with per-task jitter.
    pub fn grouped(tasks: usize, train_per_task: usize, test_per_task: usize, num_features: usize, seed: u64) -> Self {
        let mut profile = vec![0.0; 15];
        for &i in &HIGH_FREQ_LABELS {
            profile[i] = 0.45;
        }
        for &i in &MEDIUM_FREQ_LABELS {
            profile[i] = 0.18;
        }
        for &i in &LOW_FREQ_LABELS {
            profile[i] = 0.05;
        }
        let mut config = Self::uniform(tasks, train_per_task, 15, num_features, 0.0, seed);
        config.test_per_task = test_per_task;
        config.label_profiles = jittered_profiles(&profile, tasks, 0.6, seed);
        config
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks == 0 || self.train_per_task == 0 || self.num_labels == 0 || self.num_features == 0 {
            return Err(Error::InvalidConfig(
                "tasks, samples per task, labels and features must be at least 1".into(),
            ));
        }
        if self.label_profiles.len() != self.tasks {
            return Err(Error::InvalidConfig(format!(
                "{} label profiles for {} tasks",
                self.label_profiles.len(),
                self.tasks
            )));
        }
        for profile in &self.label_profiles {
            if profile.len() != self.num_labels {
                return Err(Error::DimensionMismatch {
                    expected: self.num_labels,
                    actual: profile.len(),
                });
            }
            if profile.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidConfig("label marginals must lie in [0, 1]".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.task_shift) || self.noise.is_nan() || self.noise < 0.0 {
            return Err(Error::InvalidConfig("task shift must lie in [0, 1] and noise be >= 0".into()));
        }
        Ok(())
    }
}

fn jittered_profiles(profile: &[f64], tasks: usize, variation: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..tasks)
        .map(|_| {
            profile
                .iter()
                .map(|&p| {
                    let factor = if variation > 0.0 {
                        rng.random_range(1.0 - variation..=1.0 + variation)
                    } else {
                        1.0
                    };
                    (p * factor).clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect()
}

fn random_direction<R: Rng + ?Sized>(num_features: usize, rng: &mut R) -> Vec<f64> {
    let mut dir = vec![0.0; num_features];
    for _ in 0..SIGNATURE_FEATURES.min(num_features) {
        let k = rng.random_range(0..num_features);
        dir[k] += rng.random_range(0.5..1.5);
    }
    dir
}

/// Generates the stream described by `config`. Bitwise deterministic per seed.
pub fn generate_stream(config: &StreamConfig) -> Result<TaskStream> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (n, l) = (config.num_features, config.num_labels);

    let shared: Vec<Vec<f64>> = (0..l).map(|_| random_direction(n, &mut rng)).collect();
    let noise = Normal::new(0.0, config.noise.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut next_id = 0u64;
    let mut tasks = Vec::with_capacity(config.tasks);
    for (t, profile) in config.label_profiles.iter().enumerate() {
        let task_id = t as u32 + 1;
        let own: Vec<Vec<f64>> = (0..l).map(|_| random_direction(n, &mut rng)).collect();
        let background: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.3)).collect();
        let directions: Vec<Vec<f64>> = shared
            .iter()
            .zip(&own)
            .map(|(s, o)| {
                s.iter()
                    .zip(o)
                    .map(|(a, b)| (1.0 - config.task_shift) * a + config.task_shift * b)
                    .collect()
            })
            .collect();

        let mut draw = |count: usize, rng: &mut ChaCha8Rng| -> Vec<MultiLabelSample> {
            (0..count)
                .map(|_| {
                    let labels: Vec<bool> = profile.iter().map(|&p| rng.random_bool(p)).collect();
                    let mut raw: Vec<f64> = background.iter().map(|&b| b * rng.random::<f64>()).collect();
                    for (dir, _) in directions.iter().zip(&labels).filter(|(_, &y)| y) {
                        let strength = rng.random_range(0.5..1.5);
                        raw.iter_mut().zip(dir).for_each(|(r, d)| *r += strength * d);
                    }
                    for r in raw.iter_mut() {
                        *r = (*r + noise.sample(rng)).max(0.0);
                    }
                    let sum: f64 = raw.iter().sum();
                    if sum > 0.0 {
                        raw.iter_mut().for_each(|r| *r /= sum);
                    }
                    next_id += 1;
                    MultiLabelSample::new(raw, labels, task_id, next_id - 1)
                })
                .collect()
        };
        let train = draw(config.train_per_task, &mut rng);
        let test = draw(config.test_per_task, &mut rng);
        tasks.push(TaskDataset { task_id, train, test });
    }
    TaskStream::new(tasks, l, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_task_shape() {
        let stream = generate_stream(&StreamConfig::uniform(1, 10, 3, 5, 0.3, 1)).unwrap();
        assert_eq!(stream.num_tasks(), 1);
        assert_eq!(stream.tasks()[0].train.len(), 10);
        assert!(stream.tasks()[0].train.iter().all(|s| s.task_id == 1));
    }

    #[test]
    fn uniform_profile_frequencies() {
        // Each label is Bernoulli(0.3) over 20 000 draws: sigma = sqrt(n p (1-p)).
        let (n, p) = (20_000usize, 0.3);
        let stream = generate_stream(&StreamConfig::uniform(1, n, 6, 8, p, 7)).unwrap();
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for label in 0..6 {
            let hits = stream.tasks()[0].train.iter().filter(|s| s.labels[label]).count() as f64;
            assert!((hits - n as f64 * p).abs() <= 3.0 * sigma, "label {label}: {hits}");
        }
    }

    #[test]
    fn seeds_matter_and_repeat() {
        let a = generate_stream(&StreamConfig::uniform(2, 20, 3, 5, 0.3, 1)).unwrap();
        let b = generate_stream(&StreamConfig::uniform(2, 20, 3, 5, 0.3, 1)).unwrap();
        let c = generate_stream(&StreamConfig::uniform(2, 20, 3, 5, 0.3, 2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn features_are_normalized_counts() {
        let stream = generate_stream(&StreamConfig::grouped(3, 50, 20, 12, 4)).unwrap();
        let mut ids = std::collections::HashSet::new();
        for task in stream.tasks() {
            for s in task.train.iter().chain(&task.test) {
                assert!(s.features.iter().all(|&f| (0.0..=1.0).contains(&f)));
                let sum: f64 = s.features.iter().sum();
                assert!(sum == 0.0 || (sum - 1.0).abs() < 1e-9);
                assert!(ids.insert(s.sample_id));
            }
        }
    }

    #[test]
    fn skewed_profile_has_dominant_label() {
        let config = StreamConfig::skewed(4, 10, 10, 8, 0.05, 10.0, 0.3, 3);
        for profile in &config.label_profiles {
            assert!(profile[0] > 5.0 * profile[1..].iter().cloned().fold(0.0, f64::max));
        }
    }

    #[test]
    fn invalid_configs() {
        let mut c = StreamConfig::uniform(2, 5, 3, 4, 0.3, 0);
        c.label_profiles[1][0] = 1.5;
        assert!(generate_stream(&c).is_err());
        let mut c = StreamConfig::uniform(2, 5, 3, 4, 0.3, 0);
        c.label_profiles.pop();
        assert!(generate_stream(&c).is_err());
        assert!(generate_stream(&StreamConfig::uniform(0, 5, 3, 4, 0.3, 0)).is_err());
    }
}
