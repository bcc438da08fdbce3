//! Total KL evaluation counts as the number of tasks grows.

use ocdm_core::data::{generate_stream, StreamConfig};
use ocdm_core::{run_strategy, StrategyKind, StrategyParams, TargetSpec, TaskStream};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const PROBE_LABELS: usize = 10;
const PROBE_FEATURES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub tasks: usize,
    pub total_evals: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub strategy: StrategyKind,
    pub samples_per_task: usize,
    pub memory_size: usize,
    pub batch_size: usize,
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    fn xy(&self, x: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        self.rows.iter().map(|r| (x(r.tasks as f64), r.total_evals as f64)).unzip()
    }

    /// Least-squares fit `count = a * T`: returns `(a, R^2)`.
    pub fn linear_fit(&self) -> (f64, f64) {
        let (x, y) = self.xy(|t| t);
        fit_through_origin(&x, &y)
    }

    /// `max / min` of `count(T) / (ln T + 1)` over the probed T.
    pub fn log_normalized_spread(&self) -> f64 {
        let ratios: Vec<f64> = self
            .rows
            .iter()
            .map(|r| r.total_evals as f64 / ((r.tasks as f64).ln() + 1.0))
            .collect();
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }

    /// `count(2T) / count(T)` for every probed pair `(T, 2T)`.
    pub fn doubling_ratios(&self) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter_map(|r| {
                let twice = self.rows.iter().find(|s| s.tasks == 2 * r.tasks)?;
                Some((r.tasks, twice.total_evals as f64 / r.total_evals as f64))
            })
            .collect()
    }
}

/// Fits `y = a x` and returns `(a, R^2)` with `R^2` measured around the mean of `y`.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let a = sxy / sxx;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a * xi).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|yi| (yi - mean).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (a, r2)
}

/// A uniform-label stream with `samples_per_task` training samples per task.
pub fn probe_stream(tasks: usize, samples_per_task: usize, seed: u64) -> Result<TaskStream> {
    Ok(generate_stream(&StreamConfig::uniform(
        tasks,
        samples_per_task,
        PROBE_LABELS,
        PROBE_FEATURES,
        0.2,
        seed,
    ))?)
}

/// Runs `kind` in memory-only mode on the first `T` tasks of one stream, for
/// every `T` in `task_counts`.
pub fn scaling_probe(
    kind: StrategyKind,
    task_counts: &[usize],
    samples_per_task: usize,
    memory_size: usize,
    batch_size: usize,
    seed: u64,
) -> Result<ScalingReport> {
    let longest = *task_counts
        .iter()
        .max()
        .ok_or_else(|| BenchError::Invalid("no task counts to probe".into()))?;
    let stream = probe_stream(longest, samples_per_task, seed)?;
    let params = StrategyParams {
        memory_size,
        batch_size,
        target: TargetSpec::default(),
    };
    let rows = task_counts
        .iter()
        .map(|&tasks| {
            let mut strategy = kind.build(&params, PROBE_LABELS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let report = run_strategy(strategy.as_mut(), &stream.truncated(tasks), &mut rng)?;
            Ok(ScalingRow {
                tasks,
                total_evals: report.total_evals(),
                seconds: report.seconds_per_task.iter().sum(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingReport {
        strategy: kind,
        samples_per_task,
        memory_size,
        batch_size,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ocdm_core::memory_update_cost;

    #[test]
    fn perfect_line() {
        let (a, r2) = fit_through_origin(&[1.0, 2.0, 4.0], &[3.0, 6.0, 12.0]);
        assert!((a - 3.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
        let (_, r2) = fit_through_origin(&[1.0, 2.0, 4.0], &[10.0, 1.0, 10.0]);
        assert!(r2 < 0.5);
    }

    #[test]
    fn ocdm_counts_follow_closed_form() {
        // D = 40, M = 20, b = 5: the first 20 samples fill the memory, every
        // later batch costs MU(25, 5).
        let report = scaling_probe(StrategyKind::Ocdm, &[1, 2, 3], 40, 20, 5, 0).unwrap();
        let per_batch = memory_update_cost(25, 5);
        let expected = |t: u64| (4 + 8 * (t - 1)) * per_batch;
        for row in &report.rows {
            assert_eq!(row.total_evals, expected(row.tasks as u64), "T = {}", row.tasks);
        }
    }

    #[test]
    fn single_task_degeneracy() {
        let ocdm = scaling_probe(StrategyKind::Ocdm, &[1], 50, 20, 4, 3).unwrap();
        let bat = scaling_probe(StrategyKind::BatOcdm, &[1], 50, 20, 4, 3).unwrap();
        assert_eq!(ocdm.rows[0].total_evals, bat.rows[0].total_evals);
    }

    #[test]
    fn doubling_pairs() {
        let report = ScalingReport {
            strategy: StrategyKind::Ocdm,
            samples_per_task: 1,
            memory_size: 1,
            batch_size: 1,
            rows: [(4, 10), (8, 20), (16, 41)]
                .into_iter()
                .map(|(tasks, total_evals)| ScalingRow { tasks, total_evals, seconds: 0.0 })
                .collect(),
        };
        assert_eq!(report.doubling_ratios(), vec![(4, 2.0), (8, 2.05)]);
    }
}
