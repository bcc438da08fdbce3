//! Label-occurrence distributions and the KL objective minimized by every
//! OCDM-family memory strategy.
//!
//! Empty label bins are handled with additive smoothing so that the
//! divergence stays finite: an empirical distribution built from counts `n`
//! is `(n_i + eps) / (total + L * eps)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::MultiLabelSample;

pub const DEFAULT_EPSILON: f64 = 1e-9;
const MAX_EPSILON: f64 = 1e-3;

/// Per-label occurrence counts over a set of samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    counts: Vec<u64>,
    total: u64,
}

impl LabelCounts {
    pub fn zeros(num_labels: usize) -> Self {
        Self {
            counts: vec![0; num_labels],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn from_samples<'a, I>(num_labels: usize, samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a MultiLabelSample>,
    {
        let mut counts = Self::zeros(num_labels);
        for s in samples {
            counts.add(s)?;
        }
        Ok(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn num_labels(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, sample: &MultiLabelSample) -> Result<()> {
        self.check_len(sample)?;
        for i in sample.positive_labels() {
            self.counts[i] += 1;
            self.total += 1;
        }
        Ok(())
    }

    /// In-place form of [`counts_without_sample`]. Leaves `self` untouched on error.
    pub fn remove(&mut self, sample: &MultiLabelSample) -> Result<()> {
        self.check_len(sample)?;
        if let Some(label) = sample.positive_labels().find(|&i| self.counts[i] == 0) {
            return Err(Error::CountUnderflow { label });
        }
        for i in sample.positive_labels() {
            self.counts[i] -= 1;
            self.total -= 1;
        }
        Ok(())
    }

    fn check_len(&self, sample: &MultiLabelSample) -> Result<()> {
        if sample.num_labels() != self.counts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.counts.len(),
                actual: sample.num_labels(),
            });
        }
        Ok(())
    }
}

/// A probability vector over the label universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    probs: Vec<f64>,
}

impl LabelDistribution {
    pub fn uniform(num_labels: usize) -> Self {
        Self {
            probs: vec![1.0 / num_labels as f64; num_labels],
        }
    }

    /// Wraps raw probabilities. The caller is responsible for normalization.
    pub fn from_probs(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Shape of the target distribution: `p_i ∝ n_i^rho`, smoothed by `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub rho: f64,
    pub epsilon: f64,
}

impl TargetSpec {
    pub fn new(rho: f64, epsilon: f64) -> Result<Self> {
        let spec = Self { rho, epsilon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_rho(rho: f64) -> Self {
        Self {
            rho,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= MAX_EPSILON) {
            return Err(Error::InvalidEpsilon(self.epsilon));
        }
        Ok(())
    }
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self::with_rho(0.0)
    }
}

/// Smoothed empirical label distribution of `counts`.
pub fn empirical_distribution(counts: &LabelCounts, epsilon: f64) -> LabelDistribution {
    let mut probs = vec![0.0; counts.num_labels()];
    fill_empirical(counts.counts().iter().copied(), counts.total(), epsilon, &mut probs);
    LabelDistribution { probs }
}

pub(crate) fn fill_empirical<I>(counts: I, total: u64, epsilon: f64, out: &mut [f64])
where
    I: IntoIterator<Item = u64>,
{
    let denom = total as f64 + out.len() as f64 * epsilon;
    for (p, c) in out.iter_mut().zip(counts) {
        *p = (c as f64 + epsilon) / denom;
    }
}

/// Target distribution `p_i = n_i^rho / sum_j n_j^rho`.
///
/// `rho == 0` yields the exact uniform distribution regardless of counts.
/// Otherwise the normalized powers are smoothed with `spec.epsilon` so that
/// labels with no occurrences keep a strictly positive mass.
pub fn target_distribution(counts: &LabelCounts, spec: &TargetSpec) -> Result<LabelDistribution> {
    spec.validate()?;
    let num_labels = counts.num_labels();
    if num_labels == 0 {
        return Err(Error::EmptyInput("label universe"));
    }
    if spec.rho == 0.0 {
        return Ok(LabelDistribution::uniform(num_labels));
    }
    if spec.rho < 0.0 {
        if let Some(label) = counts.counts().iter().position(|&n| n == 0) {
            return Err(Error::UndefinedPower {
                rho: spec.rho,
                label,
            });
        }
    } else if counts.total() == 0 {
        return Err(Error::EmptyCounts);
    }

    let powered: Vec<f64> = counts
        .counts()
        .iter()
        .map(|&n| (n as f64).powf(spec.rho))
        .collect();
    let sum: f64 = powered.iter().sum();
    let denom = 1.0 + num_labels as f64 * spec.epsilon;
    let probs = powered
        .into_iter()
        .map(|x| (x / sum + spec.epsilon) / denom)
        .collect();
    Ok(LabelDistribution { probs })
}

/// `KL(p || q) = sum_i p_i ln(p_i / q_i)` in nats.
///
/// Terms with `p_i == 0` contribute nothing. Both arguments are expected to be
/// smoothed; a zero in `q` against positive mass in `p` gives `+inf`.
pub fn kl_distance(p: &LabelDistribution, q: &LabelDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(kl_slices(&p.probs, &q.probs))
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let kl: f64 = p
        .iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum();
    // Rounding can leave a tiny negative residue when p == q.
    kl.max(0.0)
}

/// Counts with one occurrence of each of `sample`'s positive labels removed.
pub fn counts_without_sample(counts: &LabelCounts, sample: &MultiLabelSample) -> Result<LabelCounts> {
    let mut out = counts.clone();
    out.remove(sample)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::n_hot;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sample(labels: &[bool], id: u64) -> MultiLabelSample {
        MultiLabelSample::new(vec![], labels.to_vec(), 1, id)
    }

    #[test]
    fn empirical_examples() {
        let d = empirical_distribution(&LabelCounts::from_counts(vec![1, 1]), 1e-12);
        assert_abs_diff_eq!(d.probs()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probs()[1], 0.5, epsilon = 1e-12);

        let d = empirical_distribution(&LabelCounts::from_counts(vec![0, 0]), 1e-6);
        assert_eq!(d.probs(), &[0.5, 0.5]);

        // (3 + 1e-6) / (4 + 2e-6), (1 + 1e-6) / (4 + 2e-6)
        let d = empirical_distribution(&LabelCounts::from_counts(vec![3, 1]), 1e-6);
        assert_abs_diff_eq!(d.probs()[0], 0.749_999_875_000_062_5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.probs()[1], 0.250_000_124_999_937_5, epsilon = 1e-15);
    }

    #[test]
    fn target_examples() {
        let counts = LabelCounts::from_counts(vec![2, 1, 1]);
        let uniform = target_distribution(&counts, &TargetSpec::with_rho(0.0)).unwrap();
        assert_eq!(uniform.probs(), &[1.0 / 3.0; 3]);

        let linear = target_distribution(&counts, &TargetSpec::with_rho(1.0)).unwrap();
        for (p, want) in linear.probs().iter().zip([0.5, 0.25, 0.25]) {
            assert_abs_diff_eq!(*p, want, epsilon = 1e-8);
        }

        let sqrt = target_distribution(&LabelCounts::from_counts(vec![4, 1]), &TargetSpec::with_rho(0.5))
            .unwrap();
        assert_abs_diff_eq!(sqrt.probs()[0], 2.0 / 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sqrt.probs()[1], 1.0 / 3.0, epsilon = 1e-8);
    }

    #[test]
    fn target_errors() {
        let with_zero = LabelCounts::from_counts(vec![2, 0]);
        assert!(matches!(
            target_distribution(&with_zero, &TargetSpec::with_rho(-1.0)),
            Err(Error::UndefinedPower { label: 1, .. })
        ));
        assert!(matches!(
            target_distribution(&LabelCounts::zeros(3), &TargetSpec::with_rho(1.0)),
            Err(Error::EmptyCounts)
        ));
        assert!(matches!(TargetSpec::new(0.0, 0.0), Err(Error::InvalidEpsilon(_))));
        assert!(matches!(TargetSpec::new(0.0, 0.01), Err(Error::InvalidEpsilon(_))));
        // positive rho tolerates empty bins thanks to smoothing
        let p = target_distribution(&with_zero, &TargetSpec::with_rho(1.0)).unwrap();
        assert!(p.probs()[1] > 0.0);
    }

    #[test]
    fn kl_examples() {
        let half = LabelDistribution::from_probs(vec![0.5, 0.5]);
        assert_eq!(kl_distance(&half, &half).unwrap(), 0.0);

        let degenerate = LabelDistribution::from_probs(vec![1.0 - 1e-9, 1e-9]);
        assert!(kl_distance(&half, &degenerate).unwrap() > 5.0);

        let skew = LabelDistribution::from_probs(vec![0.75, 0.25]);
        // 0.75 ln 1.5 + 0.25 ln 0.5
        assert_abs_diff_eq!(kl_distance(&skew, &half).unwrap(), 0.130_812_035_941_136_97, epsilon = 1e-12);

        let three = LabelDistribution::uniform(3);
        assert!(matches!(
            kl_distance(&half, &three),
            Err(Error::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn removal_examples() {
        let cases: [(&[u64], &[usize], &[u64]); 3] = [
            (&[2, 1], &[0], &[1, 1]),
            (&[1, 1], &[0, 1], &[0, 0]),
            (&[3, 2, 0], &[0, 1], &[2, 1, 0]),
        ];
        for (counts, positives, want) in cases {
            let counts = LabelCounts::from_counts(counts.to_vec());
            let s = sample(&n_hot(counts.num_labels(), positives), 0);
            let out = counts_without_sample(&counts, &s).unwrap();
            assert_eq!(out.counts(), want);
            assert_eq!(out.total(), counts.total() - s.cardinality() as u64);
        }
    }

    #[test]
    fn removal_underflow() {
        let counts = LabelCounts::from_counts(vec![1, 0]);
        let s = sample(&[true, true], 0);
        assert!(matches!(
            counts_without_sample(&counts, &s),
            Err(Error::CountUnderflow { label: 1 })
        ));
        let mut same = counts.clone();
        assert!(same.remove(&s).is_err());
        assert_eq!(same, counts);
    }

    fn arb_distribution(len: usize) -> impl Strategy<Value = LabelDistribution> {
        proptest::collection::vec(0u64..50, len).prop_map(|c| {
            empirical_distribution(&LabelCounts::from_counts(c), 1e-6)
        })
    }

    fn arb_samples() -> impl Strategy<Value = Vec<Vec<bool>>> {
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), 5), 0..30)
    }

    proptest! {
        #[test]
        fn kl_self_is_zero(p in (1usize..10).prop_flat_map(arb_distribution)) {
            prop_assert_eq!(kl_distance(&p, &p).unwrap(), 0.0);
        }

        #[test]
        fn kl_non_negative(
            (p, q) in (1usize..10).prop_flat_map(|l| (arb_distribution(l), arb_distribution(l)))
        ) {
            prop_assert!(kl_distance(&p, &q).unwrap() >= 0.0);
        }

        #[test]
        fn empirical_sums_to_one(c in proptest::collection::vec(0u64..1000, 1..20)) {
            let d = empirical_distribution(&LabelCounts::from_counts(c), DEFAULT_EPSILON);
            prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(d.probs().iter().all(|&p| p > 0.0));
        }

        #[test]
        fn rho_zero_is_uniform(c in proptest::collection::vec(0u64..1000, 1..20)) {
            let l = c.len();
            let d = target_distribution(&LabelCounts::from_counts(c), &TargetSpec::default()).unwrap();
            prop_assert!(d.probs().iter().all(|&p| p == 1.0 / l as f64));
        }

        #[test]
        fn remove_then_add_round_trips(labels in arb_samples(), pick in any::<prop::sample::Index>()) {
            let samples: Vec<_> = labels.iter().enumerate().map(|(i, l)| sample(l, i as u64)).collect();
            let counts = LabelCounts::from_samples(5, &samples).unwrap();
            if let Some(s) = (!samples.is_empty()).then(|| pick.get(&samples)) {
                let mut back = counts_without_sample(&counts, s).unwrap();
                back.add(s).unwrap();
                prop_assert_eq!(back, counts);
            }
        }

        #[test]
        fn incremental_matches_recount(labels in arb_samples(), drop in proptest::collection::vec(any::<bool>(), 30)) {
            let samples: Vec<_> = labels.iter().enumerate().map(|(i, l)| sample(l, i as u64)).collect();
            let mut incremental = LabelCounts::from_samples(5, &samples).unwrap();
            let mut kept = Vec::new();
            for (s, &d) in samples.iter().zip(&drop) {
                if d { incremental.remove(s).unwrap(); } else { kept.push(s.clone()); }
            }
            let recount = LabelCounts::from_samples(5, &kept).unwrap();
            prop_assert_eq!(&incremental, &recount);
            prop_assert_eq!(
                empirical_distribution(&incremental, DEFAULT_EPSILON),
                empirical_distribution(&recount, DEFAULT_EPSILON)
            );
        }
    }
}
