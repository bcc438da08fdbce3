//! Bounded rehearsal memory and the greedy Memory Update (MU) primitive.

use serde::{Deserialize, Serialize};

use crate::distribution::{fill_empirical, kl_slices, LabelCounts, LabelDistribution, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::sample::MultiLabelSample;

/// Candidates whose objective lies within this distance of the best one are
/// considered tied; the smallest `sample_id` among them is removed.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Sample store with cached label counts and a running count of KL
/// evaluations performed by [`memory_update`].
///
/// The memory may temporarily hold more than `capacity` samples while a
/// strategy merges in a new batch; strategies shrink it back before returning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayMemory {
    samples: Vec<MultiLabelSample>,
    counts: LabelCounts,
    capacity: usize,
    eval_counter: u64,
    epsilon: f64,
}

impl ReplayMemory {
    pub fn new(capacity: usize, num_labels: usize) -> Self {
        Self {
            samples: Vec::new(),
            counts: LabelCounts::zeros(num_labels),
            capacity,
            eval_counter: 0,
            epsilon: DEFAULT_EPSILON,
        }
    }

    /// Smoothing constant used when evaluating candidate removals.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn samples(&self) -> &[MultiLabelSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<MultiLabelSample> {
        self.samples
    }

    pub fn counts(&self) -> &LabelCounts {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn set_capacity(&mut self, capacity: usize) {
        self.capacity = capacity;
    }

    pub fn num_labels(&self) -> usize {
        self.counts.num_labels()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Total KL evaluations performed on this memory so far.
    pub fn eval_count(&self) -> u64 {
        self.eval_counter
    }

    pub fn push(&mut self, sample: MultiLabelSample) -> Result<()> {
        self.counts.add(&sample)?;
        self.samples.push(sample);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = MultiLabelSample>>(&mut self, samples: I) -> Result<()> {
        samples.into_iter().try_for_each(|s| self.push(s))
    }

    pub fn remove_at(&mut self, index: usize) -> MultiLabelSample {
        let sample = self.samples.remove(index);
        self.counts
            .remove(&sample)
            .expect("cached counts include every stored sample");
        sample
    }

    pub fn replace(&mut self, index: usize, sample: MultiLabelSample) -> Result<MultiLabelSample> {
        self.counts.add(&sample)?;
        let old = std::mem::replace(&mut self.samples[index], sample);
        self.counts
            .remove(&old)
            .expect("cached counts include every stored sample");
        Ok(old)
    }

    /// True iff the cached label counts match a full recount of the samples.
    pub fn verify_counts(&self) -> bool {
        LabelCounts::from_samples(self.num_labels(), &self.samples)
            .map(|recount| recount == self.counts)
            .unwrap_or(false)
    }

    #[cfg(test)]
    pub(crate) fn corrupt_counts(&mut self) {
        let mut raw = self.counts.counts().to_vec();
        raw[0] += 1;
        self.counts = LabelCounts::from_counts(raw);
    }
}

/// Greedily removes `removals` samples from `memory`.
///
/// Each step evaluates `KL(p_{M \ {j}} || target)` for every remaining sample
/// `j` and deletes the minimizer, so the call costs exactly
/// `b*m - b*(b-1)/2` evaluations for `m` samples at entry. Returns the removed
/// samples in removal order.
pub fn memory_update(
    memory: &mut ReplayMemory,
    removals: usize,
    target: &LabelDistribution,
) -> Result<Vec<MultiLabelSample>> {
    if removals > memory.len() {
        return Err(Error::RemovalOutOfRange {
            requested: removals,
            available: memory.len(),
        });
    }
    if target.len() != memory.num_labels() {
        return Err(Error::DimensionMismatch {
            expected: memory.num_labels(),
            actual: target.len(),
        });
    }

    let mut scratch = vec![0.0; memory.num_labels()];
    let mut scores = Vec::with_capacity(memory.len());
    let mut removed = Vec::with_capacity(removals);
    for _ in 0..removals {
        scores.clear();
        for sample in &memory.samples {
            scores.push(kl_without(&memory.counts, sample, memory.epsilon, target, &mut scratch));
        }
        memory.eval_counter += memory.samples.len() as u64;

        let victim = argmin_by_id(&scores, &memory.samples);
        removed.push(memory.remove_at(victim));
    }
    Ok(removed)
}

/// Closed-form evaluation count of [`memory_update`] on `size` samples.
pub fn memory_update_cost(size: usize, removals: usize) -> u64 {
    let (m, b) = (size as u64, removals as u64);
    b * m - b * b.saturating_sub(1) / 2
}

fn kl_without(
    counts: &LabelCounts,
    sample: &MultiLabelSample,
    epsilon: f64,
    target: &LabelDistribution,
    scratch: &mut [f64],
) -> f64 {
    let reduced = counts
        .counts()
        .iter()
        .zip(&sample.labels)
        .map(|(&c, &y)| c - u64::from(y));
    let total = counts.total() - sample.cardinality() as u64;
    fill_empirical(reduced, total, epsilon, scratch);
    kl_slices(scratch, target.probs())
}

fn argmin_by_id(scores: &[f64], samples: &[MultiLabelSample]) -> usize {
    let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
    scores
        .iter()
        .zip(samples)
        .enumerate()
        .filter(|(_, (&s, _))| s <= best + TIE_TOLERANCE)
        .min_by_key(|(_, (_, sample))| sample.sample_id)
        .map(|(i, _)| i)
        .expect("memory_update never scores an empty memory")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{empirical_distribution, kl_distance};
    use crate::sample::n_hot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn memory_of(label_sets: &[&[usize]], num_labels: usize) -> ReplayMemory {
        let mut m = ReplayMemory::new(label_sets.len(), num_labels);
        for (i, set) in label_sets.iter().enumerate() {
            m.push(MultiLabelSample::new(vec![], n_hot(num_labels, set), 1, i as u64))
                .unwrap();
        }
        m
    }

    #[test]
    fn zero_removals_is_a_no_op() {
        let mut m = memory_of(&[&[0], &[1]], 2);
        let removed = memory_update(&mut m, 0, &LabelDistribution::uniform(2)).unwrap();
        assert!(removed.is_empty());
        assert_eq!(m.len(), 2);
        assert_eq!(m.eval_count(), 0);
    }

    #[test]
    fn removes_the_surplus_label() {
        // Brute force over the three single removals: dropping either {A}
        // reaches counts (1, 1) with KL 0; dropping {B} gives KL ln 2.
        let mut m = memory_of(&[&[0], &[0], &[1]], 2);
        let removed = memory_update(&mut m, 1, &LabelDistribution::uniform(2)).unwrap();
        assert_eq!(removed[0].sample_id, 0);
        assert_eq!(m.counts().counts(), &[1, 1]);
        assert_eq!(m.eval_count(), 3);
        let p = empirical_distribution(m.counts(), DEFAULT_EPSILON);
        assert!(kl_distance(&p, &LabelDistribution::uniform(2)).unwrap() < 1e-12);
    }

    #[test]
    fn removing_everything_empties() {
        let mut m = memory_of(&[&[0], &[0, 1], &[], &[1]], 2);
        memory_update(&mut m, 4, &LabelDistribution::uniform(2)).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.counts().total(), 0);
        assert_eq!(m.eval_count(), 4 + 3 + 2 + 1);
    }

    #[test]
    fn out_of_range_and_mismatch() {
        let mut m = memory_of(&[&[0]], 2);
        assert!(matches!(
            memory_update(&mut m, 2, &LabelDistribution::uniform(2)),
            Err(Error::RemovalOutOfRange { requested: 2, available: 1 })
        ));
        assert!(matches!(
            memory_update(&mut m, 1, &LabelDistribution::uniform(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn verify_counts_detects_corruption() {
        let mut m = memory_of(&[&[0], &[1]], 2);
        assert!(ReplayMemory::new(3, 2).verify_counts());
        assert!(m.verify_counts());
        m.corrupt_counts();
        assert!(!m.verify_counts());
    }

    #[test]
    fn counts_stay_consistent_over_random_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut m = ReplayMemory::new(20, 4);
        let mut next_id = 0;
        for _ in 0..100 {
            let adds = rng.random_range(0..6);
            for _ in 0..adds {
                let labels = (0..4).map(|_| rng.random_bool(0.4)).collect();
                m.push(MultiLabelSample::new(vec![], labels, 1, next_id)).unwrap();
                next_id += 1;
            }
            match rng.random_range(0..3) {
                0 if !m.is_empty() => {
                    let i = rng.random_range(0..m.len());
                    m.remove_at(i);
                }
                1 if !m.is_empty() => {
                    let i = rng.random_range(0..m.len());
                    let labels = (0..4).map(|_| rng.random_bool(0.4)).collect();
                    m.replace(i, MultiLabelSample::new(vec![], labels, 1, next_id)).unwrap();
                    next_id += 1;
                }
                _ => {
                    let b = rng.random_range(0..=m.len());
                    memory_update(&mut m, b, &LabelDistribution::uniform(4)).unwrap();
                }
            }
            assert!(m.verify_counts());
        }
    }

    #[test]
    fn closed_form_cost() {
        assert_eq!(memory_update_cost(10, 0), 0);
        assert_eq!(memory_update_cost(10, 1), 10);
        assert_eq!(memory_update_cost(10, 3), 10 + 9 + 8);
    }
}
