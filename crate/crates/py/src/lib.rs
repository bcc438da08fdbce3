//! Python bindings for the replay-memory library.

use std::path::PathBuf;

use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ocdm_bench::{BenchError, ExperimentConfig};
use ocdm_core::data::{generate_stream, StreamConfig};
use ocdm_core::metrics::{self, ScoreMatrix};
use ocdm_core::{
    LabelCounts, LabelDistribution, MultiLabelSample, StrategyKind, StrategyParams, TargetSpec, TaskStream,
    DEFAULT_EPSILON,
};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn core_err(e: ocdm_core::Error) -> PyErr {
    value_error(e)
}

fn bench_err(e: BenchError) -> PyErr {
    value_error(e)
}

/// One multi-label sample.
#[pyclass(name = "Sample", from_py_object)]
#[derive(Clone)]
struct PySample {
    inner: MultiLabelSample,
}

#[pymethods]
impl PySample {
    #[new]
    #[pyo3(signature = (features, labels, task_id=1, sample_id=0))]
    fn new(features: Vec<f64>, labels: Vec<bool>, task_id: u32, sample_id: u64) -> Self {
        Self {
            inner: MultiLabelSample::new(features, labels, task_id, sample_id),
        }
    }

    #[getter]
    fn features(&self) -> Vec<f64> {
        self.inner.features.clone()
    }

    #[getter]
    fn labels(&self) -> Vec<bool> {
        self.inner.labels.clone()
    }

    #[getter]
    fn task_id(&self) -> u32 {
        self.inner.task_id
    }

    #[getter]
    fn sample_id(&self) -> u64 {
        self.inner.sample_id
    }

    fn __repr__(&self) -> String {
        format!(
            "Sample(task_id={}, sample_id={}, positives={:?})",
            self.inner.task_id,
            self.inner.sample_id,
            self.inner.positive_labels().collect::<Vec<_>>()
        )
    }
}

fn wrap(samples: &[MultiLabelSample]) -> Vec<PySample> {
    samples.iter().cloned().map(|inner| PySample { inner }).collect()
}

/// Bounded replay memory with greedy KL-driven eviction.
#[pyclass(name = "ReplayMemory")]
struct PyReplayMemory {
    inner: ocdm_core::ReplayMemory,
}

#[pymethods]
impl PyReplayMemory {
    #[new]
    #[pyo3(signature = (capacity, num_labels, epsilon=DEFAULT_EPSILON))]
    fn new(capacity: usize, num_labels: usize, epsilon: f64) -> Self {
        Self {
            inner: ocdm_core::ReplayMemory::new(capacity, num_labels).with_epsilon(epsilon),
        }
    }

    fn push(&mut self, sample: PySample) -> PyResult<()> {
        self.inner.push(sample.inner).map_err(core_err)
    }

    fn extend(&mut self, samples: Vec<PySample>) -> PyResult<()> {
        self.inner.extend(samples.into_iter().map(|s| s.inner)).map_err(core_err)
    }

    /// Removes `removals` samples greedily toward the target built from the
    /// current counts. Returns the removed samples in order.
    #[pyo3(signature = (removals, rho=0.0))]
    fn update(&mut self, removals: usize, rho: f64) -> PyResult<Vec<PySample>> {
        let spec = TargetSpec::new(rho, self.inner.epsilon()).map_err(core_err)?;
        let target = ocdm_core::target_distribution(self.inner.counts(), &spec).map_err(core_err)?;
        self.update_toward(removals, target.probs().to_vec())
    }

    /// Same as `update` with an explicit target distribution.
    fn update_toward(&mut self, removals: usize, target: Vec<f64>) -> PyResult<Vec<PySample>> {
        let target = LabelDistribution::from_probs(target);
        let removed = ocdm_core::memory_update(&mut self.inner, removals, &target).map_err(core_err)?;
        Ok(wrap(&removed))
    }

    fn samples(&self) -> Vec<PySample> {
        wrap(self.inner.samples())
    }

    fn sample_ids(&self) -> Vec<u64> {
        self.inner.samples().iter().map(|s| s.sample_id).collect()
    }

    fn label_counts(&self) -> Vec<u64> {
        self.inner.counts().counts().to_vec()
    }

    fn distribution(&self) -> Vec<f64> {
        ocdm_core::empirical_distribution(self.inner.counts(), self.inner.epsilon())
            .probs()
            .to_vec()
    }

    #[getter]
    fn capacity(&self) -> usize {
        self.inner.capacity()
    }

    #[getter]
    fn eval_count(&self) -> u64 {
        self.inner.eval_count()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A stream of tasks with train and test splits.
#[pyclass(name = "TaskStream")]
struct PyTaskStream {
    inner: TaskStream,
}

#[pymethods]
impl PyTaskStream {
    #[getter]
    fn num_tasks(&self) -> usize {
        self.inner.num_tasks()
    }

    #[getter]
    fn num_labels(&self) -> usize {
        self.inner.num_labels()
    }

    #[getter]
    fn num_features(&self) -> usize {
        self.inner.num_features()
    }

    /// `(train, test)` samples of task `index` (0-based).
    fn task(&self, index: usize) -> PyResult<(Vec<PySample>, Vec<PySample>)> {
        let task = self
            .inner
            .tasks()
            .get(index)
            .ok_or_else(|| PyIndexError::new_err(format!("task index {index} out of range")))?;
        Ok((wrap(&task.train), wrap(&task.test)))
    }

    fn truncated(&self, tasks: usize) -> Self {
        Self {
            inner: self.inner.truncated(tasks),
        }
    }
}

/// Builds a synthetic stream. `profile` is `uniform`, `skewed` or `grouped`
/// (the last always has 15 labels).
#[pyfunction]
#[pyo3(signature = (
    profile="grouped", tasks=6, train_per_task=400, test_per_task=200, num_labels=15,
    num_features=40, base=0.06, skew=10.0, variation=0.3, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn synthetic_stream(
    profile: &str,
    tasks: usize,
    train_per_task: usize,
    test_per_task: usize,
    num_labels: usize,
    num_features: usize,
    base: f64,
    skew: f64,
    variation: f64,
    seed: u64,
) -> PyResult<PyTaskStream> {
    let mut config = match profile {
        "uniform" => StreamConfig::uniform(tasks, train_per_task, num_labels, num_features, base, seed),
        "skewed" => StreamConfig::skewed(tasks, train_per_task, num_labels, num_features, base, skew, variation, seed),
        "grouped" => StreamConfig::grouped(tasks, train_per_task, test_per_task, num_features, seed),
        other => return Err(value_error(format!("unknown profile {other:?}"))),
    };
    config.test_per_task = test_per_task;
    let inner = generate_stream(&config).map_err(core_err)?;
    Ok(PyTaskStream { inner })
}

/// Reads train (and optionally test) sample CSVs into a stream.
#[pyfunction]
#[pyo3(signature = (train, test=None))]
fn load_stream(train: PathBuf, test: Option<PathBuf>) -> PyResult<PyTaskStream> {
    let (train, n, l) = ocdm_core::data::load_samples(train).map_err(core_err)?;
    let test = match test {
        Some(path) => {
            let (test, tn, tl) = ocdm_core::data::load_samples(path).map_err(core_err)?;
            if (tn, tl) != (n, l) && !test.is_empty() {
                return Err(value_error("train and test files have different columns"));
            }
            test
        }
        None => Vec::new(),
    };
    let inner = ocdm_core::data::stream_from_samples(train, test, l, n).map_err(core_err)?;
    Ok(PyTaskStream { inner })
}

/// Outcome of feeding a stream through one memory strategy.
#[pyclass(name = "StrategyReport", get_all)]
struct PyStrategyReport {
    strategy: String,
    memory_ids: Vec<u64>,
    label_counts: Vec<u64>,
    task_counts: Vec<usize>,
    evals_per_task: Vec<u64>,
    seconds_per_task: Vec<f64>,
    kl_to_target: f64,
}

#[pymethods]
impl PyStrategyReport {
    #[getter]
    fn total_evals(&self) -> u64 {
        self.evals_per_task.iter().sum()
    }
}

/// Runs a memory strategy over `stream` without training a model.
#[pyfunction]
#[pyo3(signature = (strategy, stream, memory_size, batch_size=32, rho=0.0, seed=0))]
fn run_strategy(
    strategy: &str,
    stream: &PyTaskStream,
    memory_size: usize,
    batch_size: usize,
    rho: f64,
    seed: u64,
) -> PyResult<PyStrategyReport> {
    let kind: StrategyKind = strategy.parse().map_err(core_err)?;
    let target = TargetSpec::new(rho, DEFAULT_EPSILON).map_err(core_err)?;
    let params = StrategyParams {
        memory_size,
        batch_size,
        target,
    };
    let num_labels = stream.inner.num_labels();
    let mut boxed = kind.build(&params, num_labels);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = ocdm_core::run_strategy(boxed.as_mut(), &stream.inner, &mut rng).map_err(core_err)?;
    let kl_to_target = if report.final_memory.is_empty() {
        f64::NAN
    } else {
        metrics::memory_kl_report(&report.final_memory, &target).map_err(core_err)?
    };
    Ok(PyStrategyReport {
        strategy: kind.name().to_string(),
        memory_ids: report.final_memory.iter().map(|s| s.sample_id).collect(),
        label_counts: report.label_counts(num_labels).map_err(core_err)?.counts().to_vec(),
        task_counts: report.task_counts(stream.inner.num_tasks()),
        evals_per_task: report.evals_per_task,
        seconds_per_task: report.seconds_per_task,
        kl_to_target,
    })
}

#[pyfunction]
fn kl_distance(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    ocdm_core::kl_distance(&LabelDistribution::from_probs(p), &LabelDistribution::from_probs(q)).map_err(core_err)
}

/// Smoothed label distribution of per-label positive counts.
#[pyfunction]
#[pyo3(signature = (counts, epsilon=DEFAULT_EPSILON))]
fn empirical_distribution(counts: Vec<u64>, epsilon: f64) -> Vec<f64> {
    ocdm_core::empirical_distribution(&LabelCounts::from_counts(counts), epsilon)
        .probs()
        .to_vec()
}

#[pyfunction]
#[pyo3(signature = (counts, rho=0.0, epsilon=DEFAULT_EPSILON))]
fn target_distribution(counts: Vec<u64>, rho: f64, epsilon: f64) -> PyResult<Vec<f64>> {
    let spec = TargetSpec::new(rho, epsilon).map_err(core_err)?;
    let target = ocdm_core::target_distribution(&LabelCounts::from_counts(counts), &spec).map_err(core_err)?;
    Ok(target.probs().to_vec())
}

/// Number of KL evaluations for `removals` greedy steps on `size` samples.
#[pyfunction]
fn memory_update_cost(size: usize, removals: usize) -> u64 {
    ocdm_core::memory_update_cost(size, removals)
}

#[pyfunction]
fn macro_f1(preds: Vec<Vec<bool>>, targets: Vec<Vec<bool>>) -> PyResult<f64> {
    metrics::macro_f1(&preds, &targets).map_err(core_err)
}

/// `scores[i][j]`: macro-F1 on task `j` after training through task `i`.
#[pyfunction]
#[pyo3(signature = (scores, tasks=None))]
fn average_macro_f1(scores: Vec<Vec<f64>>, tasks: Option<usize>) -> PyResult<f64> {
    let n = tasks.unwrap_or(scores.len());
    let matrix = ScoreMatrix::from_rows(scores).map_err(core_err)?;
    metrics::average_macro_f1(&matrix, n).map_err(core_err)
}

#[pyfunction]
#[pyo3(signature = (scores, tasks=None))]
fn average_forgetting(scores: Vec<Vec<f64>>, tasks: Option<usize>) -> PyResult<f64> {
    let n = tasks.unwrap_or(scores.len());
    let matrix = ScoreMatrix::from_rows(scores).map_err(core_err)?;
    metrics::average_forgetting(&matrix, n).map_err(core_err)
}

/// Summary of one strategy within a full experiment.
#[pyclass(name = "RunMetrics", get_all)]
struct PyRunMetrics {
    strategy: String,
    s_t: Option<f64>,
    f_t: Option<f64>,
    total_evals: u64,
    groups: Vec<(String, f64, Option<f64>)>,
}

/// Runs a full experiment. `config` is the text of a key = value config
/// file; `overrides` are `KEY=VALUE` strings applied on top. Results are
/// written under the configured output directory.
#[pyfunction]
#[pyo3(signature = (config="", overrides=Vec::new()))]
fn run_experiment(py: Python<'_>, config: &str, overrides: Vec<String>) -> PyResult<Vec<PyRunMetrics>> {
    let mut cfg = ExperimentConfig::parse(config).map_err(bench_err)?;
    cfg.apply_overrides(&overrides).map_err(bench_err)?;
    cfg.validate().map_err(bench_err)?;
    let runs = py.detach(|| ocdm_bench::run_experiment(&cfg)).map_err(bench_err)?;
    Ok(runs
        .into_iter()
        .map(|m| PyRunMetrics {
            strategy: m.strategy.name().to_string(),
            s_t: m.s_t,
            f_t: m.f_t,
            total_evals: m.total_evals,
            groups: m.groups.into_iter().map(|g| (g.name, g.s_t, g.f_t)).collect(),
        })
        .collect())
}

/// Total KL evaluations for each task count: list of `(tasks, evals)`.
#[pyfunction]
#[pyo3(signature = (strategy, task_counts, samples_per_task=200, memory_size=100, batch_size=1, seed=0))]
fn scaling_probe(
    strategy: &str,
    task_counts: Vec<usize>,
    samples_per_task: usize,
    memory_size: usize,
    batch_size: usize,
    seed: u64,
) -> PyResult<Vec<(usize, u64)>> {
    let kind: StrategyKind = strategy.parse().map_err(core_err)?;
    let report = ocdm_bench::scaling_probe(kind, &task_counts, samples_per_task, memory_size, batch_size, seed)
        .map_err(bench_err)?;
    Ok(report.rows.iter().map(|r| (r.tasks, r.total_evals)).collect())
}

#[pymodule]
fn ocdm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySample>()?;
    m.add_class::<PyReplayMemory>()?;
    m.add_class::<PyTaskStream>()?;
    m.add_class::<PyStrategyReport>()?;
    m.add_class::<PyRunMetrics>()?;
    m.add_function(wrap_pyfunction!(synthetic_stream, m)?)?;
    m.add_function(wrap_pyfunction!(load_stream, m)?)?;
    m.add_function(wrap_pyfunction!(run_strategy, m)?)?;
    m.add_function(wrap_pyfunction!(kl_distance, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(target_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(memory_update_cost, m)?)?;
    m.add_function(wrap_pyfunction!(macro_f1, m)?)?;
    m.add_function(wrap_pyfunction!(average_macro_f1, m)?)?;
    m.add_function(wrap_pyfunction!(average_forgetting, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_probe, m)?)?;
    m.add("STRATEGIES", StrategyKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>())?;
    Ok(())
}
