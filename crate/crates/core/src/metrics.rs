//! Continual-learning metrics and memory diagnostics.

use serde::{Deserialize, Serialize};

use crate::distribution::{empirical_distribution, kl_distance, target_distribution, LabelCounts, TargetSpec};
use crate::error::{Error, Result};
use crate::sample::MultiLabelSample;

/// Per-label f1 scores; a label with no true or predicted positives scores 0.
pub fn per_label_f1(preds: &[Vec<bool>], targets: &[Vec<bool>]) -> Result<Vec<f64>> {
    if preds.is_empty() || targets.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    if preds.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            actual: preds.len(),
        });
    }
    let num_labels = targets[0].len();
    if num_labels == 0 {
        return Err(Error::EmptyInput("label universe"));
    }
    let mut tp = vec![0u64; num_labels];
    let mut fp = vec![0u64; num_labels];
    let mut fneg = vec![0u64; num_labels];
    for (p, t) in preds.iter().zip(targets) {
        if p.len() != num_labels || t.len() != num_labels {
            return Err(Error::DimensionMismatch {
                expected: num_labels,
                actual: if p.len() != num_labels { p.len() } else { t.len() },
            });
        }
        for i in 0..num_labels {
            match (p[i], t[i]) {
                (true, true) => tp[i] += 1,
                (true, false) => fp[i] += 1,
                (false, true) => fneg[i] += 1,
                (false, false) => {}
            }
        }
    }
    Ok((0..num_labels)
        .map(|i| {
            let denom = 2 * tp[i] + fp[i] + fneg[i];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[i] as f64 / denom as f64
            }
        })
        .collect())
}

/// Mean of the per-label f1 scores.
pub fn macro_f1(preds: &[Vec<bool>], targets: &[Vec<bool>]) -> Result<f64> {
    let f1 = per_label_f1(preds, targets)?;
    Ok(f1.iter().sum::<f64>() / f1.len() as f64)
}

/// `s[i][j]`: score on the test set of task `j` after training on task `i`
/// (both zero-based here). Only `j <= i` is meaningful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    scores: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn zeros(num_tasks: usize) -> Self {
        Self {
            scores: vec![vec![0.0; num_tasks]; num_tasks],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for row in &rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidConfig(format!("score {v} outside [0, 1]")));
            }
        }
        Ok(Self { scores: rows })
    }

    pub fn num_tasks(&self) -> usize {
        self.scores.len()
    }

    pub fn get(&self, trained: usize, tested: usize) -> f64 {
        self.scores[trained][tested]
    }

    pub fn set(&mut self, trained: usize, tested: usize, value: f64) {
        self.scores[trained][tested] = value;
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.scores
    }
}

/// `S_T`: mean score over tasks `1..=T` after training on task `T`.
pub fn average_macro_f1(scores: &ScoreMatrix, tasks: usize) -> Result<f64> {
    if tasks == 0 || tasks > scores.num_tasks() {
        return Err(Error::InvalidConfig(format!(
            "T = {tasks} outside 1..={}",
            scores.num_tasks()
        )));
    }
    let row = &scores.rows()[tasks - 1];
    Ok(row[..tasks].iter().sum::<f64>() / tasks as f64)
}

/// `F_T`: for every old task `j < T`, the largest relative drop
/// `(s[l][j] - s[T][j]) / s[l][j]` over the rows `l` in `j..T-1` where task `j`
/// had been learned, averaged over `j` and clamped to `[-1, 1]`.
///
/// Rows with `s[l][j] == 0` are skipped; a task with no usable row contributes 0.
pub fn average_forgetting(scores: &ScoreMatrix, tasks: usize) -> Result<f64> {
    if tasks < 2 || tasks > scores.num_tasks() {
        return Err(Error::InvalidConfig(format!(
            "forgetting needs 2 <= T <= {}, got {tasks}",
            scores.num_tasks()
        )));
    }
    let last = tasks - 1;
    let total: f64 = (0..last)
        .map(|j| {
            let now = scores.get(last, j);
            (j..last)
                .map(|l| scores.get(l, j))
                .filter(|&before| before != 0.0)
                .map(|before| (before - now) / before)
                .fold(None, |best: Option<f64>, v| Some(best.map_or(v, |b| b.max(v))))
                .unwrap_or(0.0)
        })
        .sum();
    Ok((total / last as f64).clamp(-1.0, 1.0))
}

/// KL distance from the memory's label distribution to the target shaped by `target`.
pub fn memory_kl_report(memory: &[MultiLabelSample], target: &TargetSpec) -> Result<f64> {
    let first = memory.first().ok_or(Error::EmptyInput("memory"))?;
    let counts = LabelCounts::from_samples(first.num_labels(), memory)?;
    let p = empirical_distribution(&counts, target.epsilon);
    let q = target_distribution(&counts, target)?;
    kl_distance(&p, &q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskBalance {
    /// Stored samples for task ids `1..=T`.
    pub counts: Vec<usize>,
    /// `max / min` over tasks; infinite when a task is absent.
    pub max_min_ratio: f64,
}

impl TaskBalance {
    pub fn has_absent_task(&self) -> bool {
        self.max_min_ratio.is_infinite()
    }
}

pub fn task_balance_report(memory: &[MultiLabelSample], tasks: usize) -> TaskBalance {
    let counts = crate::strategies::task_counts(memory, tasks);
    let max = counts.iter().copied().max().unwrap_or(0);
    let min = counts.iter().copied().min().unwrap_or(0);
    let max_min_ratio = if min == 0 { f64::INFINITY } else { max as f64 / min as f64 };
    TaskBalance { counts, max_min_ratio }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::n_hot;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bits(rows: &[&[u8]]) -> Vec<Vec<bool>> {
        rows.iter().map(|r| r.iter().map(|&b| b == 1).collect()).collect()
    }

    #[test]
    fn macro_f1_examples() {
        let t = bits(&[&[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(macro_f1(&t, &t).unwrap(), 1.0);

        let flipped: Vec<Vec<bool>> = t.iter().map(|r| r.iter().map(|b| !b).collect()).collect();
        assert_eq!(macro_f1(&flipped, &t).unwrap(), 0.0);

        // label 0: perfect; label 1: tp 1, fp 1, fn 1 -> 2 / 4 = 0.5
        let targets = bits(&[&[1, 1], &[0, 1], &[1, 0]]);
        let preds = bits(&[&[1, 1], &[0, 0], &[1, 1]]);
        assert_abs_diff_eq!(macro_f1(&preds, &targets).unwrap(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn macro_f1_errors_and_empty_labels() {
        assert!(macro_f1(&[], &[]).is_err());
        assert!(macro_f1(&bits(&[&[1]]), &bits(&[&[1], &[0]])).is_err());
        // no positives anywhere for label 1 scores 0 by convention
        let t = bits(&[&[1, 0]]);
        assert_eq!(per_label_f1(&t, &t).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn average_macro_f1_examples() {
        let s = ScoreMatrix::from_rows(vec![vec![0.9]]).unwrap();
        assert_eq!(average_macro_f1(&s, 1).unwrap(), 0.9);
        let s = ScoreMatrix::from_rows(vec![vec![0.8, 0.0], vec![0.5, 0.7]]).unwrap();
        assert_abs_diff_eq!(average_macro_f1(&s, 2).unwrap(), 0.6, epsilon = 1e-15);
        let s = ScoreMatrix::from_rows(vec![vec![0.4, 0.4], vec![0.4, 0.4]]).unwrap();
        assert_eq!(average_macro_f1(&s, 2).unwrap(), 0.4);
        assert!(average_macro_f1(&s, 3).is_err());
    }

    #[test]
    fn forgetting_examples() {
        let constant = ScoreMatrix::from_rows(vec![vec![0.5; 3]; 3]).unwrap();
        assert_eq!(average_forgetting(&constant, 3).unwrap(), 0.0);

        let drop = ScoreMatrix::from_rows(vec![vec![0.8, 0.0], vec![0.4, 0.6]]).unwrap();
        assert_abs_diff_eq!(average_forgetting(&drop, 2).unwrap(), 0.5, epsilon = 1e-15);

        let gain = ScoreMatrix::from_rows(vec![vec![0.4, 0.0], vec![0.6, 0.6]]).unwrap();
        assert!(average_forgetting(&gain, 2).unwrap() < 0.0);

        assert!(average_forgetting(&drop, 1).is_err());
    }

    #[test]
    fn forgetting_skips_zero_rows() {
        let s = ScoreMatrix::from_rows(vec![vec![0.0, 0.0], vec![0.3, 0.5]]).unwrap();
        assert_eq!(average_forgetting(&s, 2).unwrap(), 0.0);
        // hugely improved task clamps at -1
        let s = ScoreMatrix::from_rows(vec![vec![0.1, 0.0], vec![0.9, 0.5]]).unwrap();
        assert_eq!(average_forgetting(&s, 2).unwrap(), -1.0);
    }

    #[test]
    fn memory_kl_examples() {
        let mem = |sets: &[&[usize]]| -> Vec<MultiLabelSample> {
            sets.iter()
                .enumerate()
                .map(|(i, s)| MultiLabelSample::new(vec![], n_hot(2, s), 1, i as u64))
                .collect()
        };
        let spec = TargetSpec::default();
        assert!(memory_kl_report(&mem(&[&[0], &[1]]), &spec).unwrap() < 1e-12);
        assert!(memory_kl_report(&mem(&[&[0], &[0], &[0]]), &spec).unwrap() > 0.6);
        assert_abs_diff_eq!(
            memory_kl_report(&mem(&[&[0], &[0], &[0], &[1]]), &spec).unwrap(),
            0.130_812_035_941_136_97,
            epsilon = 1e-8
        );
        assert!(memory_kl_report(&[], &spec).is_err());
    }

    #[test]
    fn task_balance() {
        let mk = |tasks: &[u32]| -> Vec<MultiLabelSample> {
            tasks.iter().enumerate().map(|(i, &t)| MultiLabelSample::new(vec![], vec![], t, i as u64)).collect()
        };
        let b = task_balance_report(&mk(&[1, 1, 2, 2, 3]), 3);
        assert_eq!(b.counts, vec![2, 2, 1]);
        assert_eq!(b.max_min_ratio, 2.0);
        let b = task_balance_report(&mk(&[1, 1, 3]), 3);
        assert!(b.has_absent_task());
    }

    proptest! {
        #[test]
        fn macro_f1_is_permutation_invariant(
            rows in proptest::collection::vec(proptest::collection::vec((any::<bool>(), any::<bool>()), 4), 1..30),
            perm_seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let preds: Vec<Vec<bool>> = rows.iter().map(|r| r.iter().map(|x| x.0).collect()).collect();
            let targets: Vec<Vec<bool>> = rows.iter().map(|r| r.iter().map(|x| x.1).collect()).collect();
            let base = macro_f1(&preds, &targets).unwrap();

            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
            let mut order: Vec<usize> = (0..rows.len()).collect();
            order.shuffle(&mut rng);
            let mut labels: Vec<usize> = (0..4).collect();
            labels.shuffle(&mut rng);
            let permute = |m: &Vec<Vec<bool>>| -> Vec<Vec<bool>> {
                order.iter().map(|&i| labels.iter().map(|&l| m[i][l]).collect()).collect()
            };
            let shuffled = macro_f1(&permute(&preds), &permute(&targets)).unwrap();
            prop_assert!((base - shuffled).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&base));
        }

        #[test]
        fn forgetting_bounds(rows in proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, 4), 4)) {
            let s = ScoreMatrix::from_rows(rows.clone()).unwrap();
            for t in 2..=4 {
                let f = average_forgetting(&s, t).unwrap();
                prop_assert!((-1.0..=1.0).contains(&f));
                let s_t = average_macro_f1(&s, t).unwrap();
                prop_assert!((0.0..=1.0).contains(&s_t));
            }
        }

        #[test]
        fn no_forgetting_when_scores_never_drop(rows in proptest::collection::vec(proptest::collection::vec(0.0f64..=0.5, 4), 3)) {
            // Final row dominates every earlier row.
            let mut rows = rows;
            let last: Vec<f64> = (0..4).map(|j| rows.iter().map(|r| r[j]).fold(0.0, f64::max) + 0.1).collect();
            rows.push(last);
            let s = ScoreMatrix::from_rows(rows).unwrap();
            prop_assert!(average_forgetting(&s, 4).unwrap() <= 0.0);
        }
    }
}
