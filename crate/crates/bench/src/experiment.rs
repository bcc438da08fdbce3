//! Running strategies over a stream and writing the result bundle.
//!
//! Each strategy writes into `<out>/<strategy>/`:
//!
//! - `scores.csv`: the T x T score matrix, row `i` = after training on task `i`
//! - `metrics.json`: `S_T`, `F_T`, per-group metrics and total KL evaluations
//! - `memory.json`: final memory size, label counts and distribution, KL to
//!   the target, per-task counts
//! - `timing.csv`: seconds spent on memory handling per task
//! - `evals.csv`: KL evaluations per task
//!
//! `<out>/summary.csv` has one row per strategy. Every file except
//! `timing.csv` is identical across runs with the same config.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ocdm_core::metrics::{
    average_forgetting, average_macro_f1, memory_kl_report, per_label_f1, task_balance_report, ScoreMatrix,
};
use ocdm_core::model::{train_task, MlpModel};
use ocdm_core::{
    empirical_distribution, LabelCounts, MultiLabelSample, StrategyKind, TaskStream, TrainingMode,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::groups::{frequency_group_metrics, GroupMetrics, LabelScores};

const MODEL_STREAM: u64 = 1;
const MEMORY_STREAM: u64 = 100;
const TRAIN_STREAM: u64 = 200;

/// Everything one strategy produced on one stream.
#[derive(Debug, Clone)]
pub struct StrategyRun {
    pub strategy: StrategyKind,
    /// Absent in memory-only mode.
    pub scores: Option<ScoreMatrix>,
    pub label_scores: Option<LabelScores>,
    pub final_memory: Vec<MultiLabelSample>,
    pub evals_per_task: Vec<u64>,
    pub seconds_per_task: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub strategy: StrategyKind,
    pub tasks: usize,
    pub num_labels: usize,
    pub seed: u64,
    pub s_t: Option<f64>,
    pub f_t: Option<f64>,
    pub groups: Vec<GroupMetrics>,
    pub total_evals: u64,
    /// KL of the final memory to the target; absent for an empty memory.
    pub kl_to_target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub strategy: StrategyKind,
    pub size: usize,
    pub rho: f64,
    /// Absent for an empty memory.
    pub kl_to_target: Option<f64>,
    pub label_counts: Vec<u64>,
    pub label_distribution: Vec<f64>,
    pub task_counts: Vec<usize>,
    /// Absent when some task has no stored sample.
    pub max_min_ratio: Option<f64>,
}

fn model_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn strategy_index(kind: StrategyKind) -> u64 {
    StrategyKind::ALL.iter().position(|&k| k == kind).expect("listed") as u64
}

/// Per-label f1 of `model` on a test set; zeros for an empty set.
fn evaluate(model: &MlpModel, test: &[MultiLabelSample], num_labels: usize) -> Result<Vec<f64>> {
    if test.is_empty() {
        return Ok(vec![0.0; num_labels]);
    }
    let preds = test.iter().map(|s| model.predict(&s.features)).collect::<ocdm_core::Result<Vec<_>>>()?;
    let targets: Vec<Vec<bool>> = test.iter().map(|s| s.labels.clone()).collect();
    Ok(per_label_f1(&preds, &targets)?)
}

/// Runs `kind` over `stream`: per task, trains the model (unless memory-only),
/// hands the task to the memory strategy, then scores every test set.
pub fn run_single(config: &ExperimentConfig, stream: &TaskStream, kind: StrategyKind) -> Result<StrategyRun> {
    let num_labels = stream.num_labels();
    let mut strategy = kind.build(&config.strategy_params(), num_labels);
    let mut memory_rng = model_rng(config.seed, MEMORY_STREAM + strategy_index(kind));
    let mut train_rng = model_rng(config.seed, TRAIN_STREAM + strategy_index(kind));

    let mut widths = vec![stream.num_features()];
    widths.extend(&config.hidden);
    widths.push(num_labels);
    let init = MlpModel::new(&widths, config.dropout, &mut model_rng(config.seed, MODEL_STREAM))?;
    let train = config.train_config();

    let tasks = stream.num_tasks();
    let mut model = init.clone();
    let mut label_scores: LabelScores = Vec::with_capacity(tasks);
    let mut evals_per_task = Vec::with_capacity(tasks);
    let mut seconds_per_task = Vec::with_capacity(tasks);

    for (i, task) in stream.tasks().iter().enumerate() {
        if !config.memory_only {
            match strategy.training_mode() {
                TrainingMode::Replay => {
                    let pool = strategy.replay_pool();
                    train_task(&mut model, &task.train, &pool, &train, &mut train_rng)?;
                }
                TrainingMode::CurrentTaskOnly => {
                    model = init.clone();
                    train_task(&mut model, &task.train, &[], &train, &mut train_rng)?;
                }
                TrainingMode::AllSeen => {
                    model = init.clone();
                    let seen: Vec<MultiLabelSample> =
                        stream.tasks()[..=i].iter().flat_map(|t| t.train.iter().cloned()).collect();
                    train_task(&mut model, &seen, &[], &train, &mut train_rng)?;
                }
            }
        }

        let before = strategy.eval_count();
        let start = Instant::now();
        strategy.observe_task(task, &mut memory_rng)?;
        seconds_per_task.push(start.elapsed().as_secs_f64());
        evals_per_task.push(strategy.eval_count() - before);

        if !config.memory_only {
            let row = stream
                .tasks()
                .iter()
                .map(|t| evaluate(&model, &t.test, num_labels))
                .collect::<Result<Vec<_>>>()?;
            label_scores.push(row);
        }
    }

    let scores = if config.memory_only {
        None
    } else {
        let rows = label_scores
            .iter()
            .map(|row| row.iter().map(|f1| f1.iter().sum::<f64>() / num_labels as f64).collect())
            .collect();
        Some(ScoreMatrix::from_rows(rows)?)
    };
    Ok(StrategyRun {
        strategy: kind,
        scores,
        label_scores: (!config.memory_only).then_some(label_scores),
        final_memory: strategy.replay_pool().into_iter().cloned().collect(),
        evals_per_task,
        seconds_per_task,
    })
}

impl StrategyRun {
    pub fn total_evals(&self) -> u64 {
        self.evals_per_task.iter().sum()
    }

    pub fn metrics(&self, config: &ExperimentConfig, stream: &TaskStream) -> Result<RunMetrics> {
        let tasks = stream.num_tasks();
        let (s_t, f_t) = match &self.scores {
            Some(scores) => (
                Some(average_macro_f1(scores, tasks)?),
                if tasks >= 2 { Some(average_forgetting(scores, tasks)?) } else { None },
            ),
            None => (None, None),
        };
        let groups = match (&self.label_scores, config.label_groups(stream.num_labels())) {
            (Some(label_scores), Some(groups)) => frequency_group_metrics(label_scores, &groups)?,
            _ => Vec::new(),
        };
        Ok(RunMetrics {
            strategy: self.strategy,
            tasks,
            num_labels: stream.num_labels(),
            seed: config.seed,
            s_t,
            f_t,
            groups,
            total_evals: self.total_evals(),
            kl_to_target: self.memory_kl(config)?,
        })
    }

    fn memory_kl(&self, config: &ExperimentConfig) -> Result<Option<f64>> {
        if self.final_memory.is_empty() {
            return Ok(None);
        }
        Ok(Some(memory_kl_report(&self.final_memory, &config.strategy_params().target)?))
    }

    pub fn memory_report(&self, config: &ExperimentConfig, stream: &TaskStream) -> Result<MemoryReport> {
        let target = config.strategy_params().target;
        let counts = LabelCounts::from_samples(stream.num_labels(), &self.final_memory)?;
        let balance = task_balance_report(&self.final_memory, stream.num_tasks());
        Ok(MemoryReport {
            strategy: self.strategy,
            size: self.final_memory.len(),
            rho: target.rho,
            kl_to_target: self.memory_kl(config)?,
            label_distribution: empirical_distribution(&counts, target.epsilon).probs().to_vec(),
            label_counts: counts.counts().to_vec(),
            max_min_ratio: balance.max_min_ratio.is_finite().then_some(balance.max_min_ratio),
            task_counts: balance.counts,
        })
    }

    /// Writes the per-strategy files into `dir`.
    pub fn write(&self, dir: &Path, config: &ExperimentConfig, stream: &TaskStream) -> Result<RunMetrics> {
        fs::create_dir_all(dir)?;
        if let Some(scores) = &self.scores {
            let mut wtr = csv::Writer::from_path(dir.join("scores.csv"))?;
            let mut header = vec!["after_task".to_string()];
            header.extend((1..=scores.num_tasks()).map(|j| format!("task_{j}")));
            wtr.write_record(&header)?;
            for (i, row) in scores.rows().iter().enumerate() {
                let mut record = vec![(i + 1).to_string()];
                record.extend(row.iter().map(f64::to_string));
                wtr.write_record(&record)?;
            }
            wtr.flush()?;
        }

        let metrics = self.metrics(config, stream)?;
        write_json(&dir.join("metrics.json"), &metrics)?;
        write_json(&dir.join("memory.json"), &self.memory_report(config, stream)?)?;

        let mut timing = csv::Writer::from_path(dir.join("timing.csv"))?;
        timing.write_record(["task", "seconds"])?;
        for (i, s) in self.seconds_per_task.iter().enumerate() {
            timing.write_record([(i + 1).to_string(), s.to_string()])?;
        }
        timing.flush()?;

        let mut evals = csv::Writer::from_path(dir.join("evals.csv"))?;
        evals.write_record(["task", "evals"])?;
        for (i, e) in self.evals_per_task.iter().enumerate() {
            evals.write_record([(i + 1).to_string(), e.to_string()])?;
        }
        evals.flush()?;
        Ok(metrics)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Runs every configured strategy on its own thread.
pub fn run_strategies(config: &ExperimentConfig, stream: &TaskStream) -> Result<Vec<StrategyRun>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .strategies
            .iter()
            .map(|&kind| scope.spawn(move || run_single(config, stream, kind)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().map_err(|_| BenchError::Invalid("strategy worker panicked".into()))?)
            .collect()
    })
}

/// Loads the stream, runs every strategy and writes the result bundle.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunMetrics>> {
    config.validate()?;
    let stream = config.load_stream()?;
    if stream.num_tasks() == 0 {
        return Err(BenchError::Invalid("the stream has no tasks".into()));
    }
    let runs = run_strategies(config, &stream)?;
    fs::create_dir_all(&config.out)?;
    let mut summary = csv::Writer::from_path(config.out.join("summary.csv"))?;
    summary.write_record(["strategy", "s_t", "f_t", "total_evals", "memory_size", "kl_to_target"])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    let mut all = Vec::with_capacity(runs.len());
    for run in &runs {
        let metrics = run.write(&config.out.join(run.strategy.name()), config, &stream)?;
        let memory = run.memory_report(config, &stream)?;
        summary.write_record([
            run.strategy.name().to_string(),
            opt(metrics.s_t),
            opt(metrics.f_t),
            metrics.total_evals.to_string(),
            memory.size.to_string(),
            opt(memory.kl_to_target),
        ])?;
        all.push(metrics);
    }
    summary.flush()?;
    Ok(all)
}
