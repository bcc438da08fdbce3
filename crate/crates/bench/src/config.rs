//! Experiment configuration as flat `key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored; a `#` after a value
//! starts a comment. Lists are comma-separated. Label groups are written as
//! `name:1,2,3;other:4,5`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use ocdm_core::data::{
    generate_stream, load_alarm_log, load_samples, machines_to_stream, stream_from_samples, window_alarm_log,
    StreamConfig, WindowSpec, HIGH_FREQ_LABELS, LOW_FREQ_LABELS, MEDIUM_FREQ_LABELS,
};
use ocdm_core::model::{TrainConfig, DEFAULT_DROPOUT, DEFAULT_HIDDEN};
use ocdm_core::{StrategyKind, StrategyParams, TargetSpec, TaskStream, DEFAULT_EPSILON};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Synthetic,
    Samples,
    AlarmLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelProfile {
    Grouped,
    Skewed,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelGroup {
    pub name: String,
    pub labels: Vec<usize>,
}

/// The three frequency groups of the 15-label alarm setup.
pub fn default_groups() -> Vec<LabelGroup> {
    [
        ("high", &HIGH_FREQ_LABELS[..]),
        ("medium", &MEDIUM_FREQ_LABELS[..]),
        ("low", &LOW_FREQ_LABELS[..]),
    ]
    .into_iter()
    .map(|(name, labels)| LabelGroup {
        name: name.into(),
        labels: labels.to_vec(),
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: SourceKind,

    // synthetic streams
    pub profile: LabelProfile,
    pub tasks: usize,
    pub train_per_task: usize,
    pub test_per_task: usize,
    pub num_labels: usize,
    pub num_features: usize,
    pub label_base: f64,
    pub label_skew: f64,
    pub label_variation: f64,
    pub task_shift: f64,
    pub noise: f64,

    // sample CSVs
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,

    // alarm logs
    pub alarm_log: Option<PathBuf>,
    pub d_in: u64,
    pub d_out: u64,
    pub stride: Option<u64>,
    pub target_codes: Vec<u32>,
    pub input_codes: Option<Vec<u32>>,
    pub drop_empty_inputs: bool,
    pub test_fraction: f64,

    pub strategies: Vec<StrategyKind>,
    pub memory_size: usize,
    pub batch_size: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub replay_ratio: f64,

    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub train_batch_size: usize,

    pub groups: Option<Vec<LabelGroup>>,
    pub memory_only: bool,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let params = StrategyParams::default();
        Self {
            source: SourceKind::Synthetic,
            profile: LabelProfile::Grouped,
            tasks: 6,
            train_per_task: 400,
            test_per_task: 200,
            num_labels: 15,
            num_features: 40,
            label_base: 0.1,
            label_skew: 10.0,
            label_variation: 0.3,
            task_shift: 0.5,
            noise: 0.05,
            train_csv: None,
            test_csv: None,
            alarm_log: None,
            d_in: 1720,
            d_out: 480,
            stride: None,
            target_codes: Vec::new(),
            input_codes: None,
            drop_empty_inputs: false,
            test_fraction: 0.2,
            strategies: vec![StrategyKind::BatOcdm],
            memory_size: params.memory_size,
            batch_size: params.batch_size,
            rho: 0.0,
            epsilon: DEFAULT_EPSILON,
            replay_ratio: train.replay_ratio,
            hidden: DEFAULT_HIDDEN.to_vec(),
            dropout: DEFAULT_DROPOUT,
            gamma: train.gamma,
            learning_rate: train.learning_rate,
            epochs: train.epochs,
            train_batch_size: train.batch_size,
            groups: None,
            memory_only: false,
            seed: 0,
            out: PathBuf::from("results"),
        }
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|e: T::Err| format!("{v:?}: {e}")))
        .collect()
}

fn parse_groups(value: &str) -> std::result::Result<Vec<LabelGroup>, String> {
    value
        .split(';')
        .map(str::trim)
        .filter(|g| !g.is_empty())
        .map(|g| {
            let (name, labels) = g.split_once(':').ok_or_else(|| format!("group {g:?} lacks a name"))?;
            Ok(LabelGroup {
                name: name.trim().to_string(),
                labels: parse_list(labels)?,
            })
        })
        .collect()
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected true or false, got {other:?}")),
    }
}

fn parse_one<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| format!("{value:?}: {e}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| BenchError::Config {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            config.set(key.trim(), value.trim()).map_err(|e| match e {
                BenchError::Config { message, .. } => BenchError::Config { line: i + 1, message },
                other => other,
            })?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one key; used for both file lines and command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let result: std::result::Result<(), String> = (|| {
            match key {
                "source" => {
                    self.source = match value {
                        "synthetic" => SourceKind::Synthetic,
                        "samples" => SourceKind::Samples,
                        "alarm_log" => SourceKind::AlarmLog,
                        other => return Err(format!("unknown source {other:?}")),
                    }
                }
                "profile" => {
                    self.profile = match value {
                        "grouped" => LabelProfile::Grouped,
                        "skewed" => LabelProfile::Skewed,
                        "uniform" => LabelProfile::Uniform,
                        other => return Err(format!("unknown profile {other:?}")),
                    }
                }
                "tasks" => self.tasks = parse_one(value)?,
                "train_per_task" => self.train_per_task = parse_one(value)?,
                "test_per_task" => self.test_per_task = parse_one(value)?,
                "num_labels" => self.num_labels = parse_one(value)?,
                "num_features" => self.num_features = parse_one(value)?,
                "label_base" => self.label_base = parse_one(value)?,
                "label_skew" => self.label_skew = parse_one(value)?,
                "label_variation" => self.label_variation = parse_one(value)?,
                "task_shift" => self.task_shift = parse_one(value)?,
                "noise" => self.noise = parse_one(value)?,
                "train_csv" => self.train_csv = Some(value.into()),
                "test_csv" => self.test_csv = Some(value.into()),
                "alarm_log" => self.alarm_log = Some(value.into()),
                "d_in" => self.d_in = parse_one(value)?,
                "d_out" => self.d_out = parse_one(value)?,
                "stride" => self.stride = Some(parse_one(value)?),
                "target_codes" => self.target_codes = parse_list(value)?,
                "input_codes" => self.input_codes = Some(parse_list(value)?),
                "drop_empty_inputs" => self.drop_empty_inputs = parse_bool(value)?,
                "test_fraction" => self.test_fraction = parse_one(value)?,
                "strategy" | "strategies" => {
                    self.strategies = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<StrategyKind>().map_err(|e| e.to_string()))
                        .collect::<std::result::Result<_, _>>()?
                }
                "memory_size" => self.memory_size = parse_one(value)?,
                "batch_size" => self.batch_size = parse_one(value)?,
                "rho" => self.rho = parse_one(value)?,
                "epsilon" => self.epsilon = parse_one(value)?,
                "replay_ratio" => self.replay_ratio = parse_one(value)?,
                "hidden" => self.hidden = parse_list(value)?,
                "dropout" => self.dropout = parse_one(value)?,
                "gamma" => self.gamma = parse_one(value)?,
                "learning_rate" => self.learning_rate = parse_one(value)?,
                "epochs" => self.epochs = parse_one(value)?,
                "train_batch_size" => self.train_batch_size = parse_one(value)?,
                "groups" => self.groups = Some(parse_groups(value)?),
                "memory_only" => self.memory_only = parse_bool(value)?,
                "seed" => self.seed = parse_one(value)?,
                "out" => self.out = value.into(),
                other => return Err(format!("unknown key {other:?}")),
            }
            Ok(())
        })();
        result.map_err(|message| BenchError::Config { line: 0, message })
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (key, value) = o.as_ref().split_once('=').ok_or_else(|| BenchError::Config {
                line: 0,
                message: format!("override {:?} is not key=value", o.as_ref()),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Err(BenchError::Config { line: 0, message });
        if self.strategies.is_empty() {
            return fail("no strategy given".into());
        }
        if self.memory_size == 0 || self.batch_size == 0 {
            return fail("memory_size and batch_size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.replay_ratio) {
            return fail(format!("replay_ratio {} outside [0, 1]", self.replay_ratio));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.epochs == 0 || self.train_batch_size == 0 {
            return fail("epochs and train_batch_size must be at least 1".into());
        }
        TargetSpec::new(self.rho, self.epsilon)?;
        match self.source {
            SourceKind::Samples if self.train_csv.is_none() || self.test_csv.is_none() => {
                fail("source = samples needs train_csv and test_csv".into())
            }
            SourceKind::AlarmLog if self.alarm_log.is_none() => fail("source = alarm_log needs alarm_log".into()),
            _ => Ok(()),
        }
    }

    pub fn strategy_params(&self) -> StrategyParams {
        StrategyParams {
            memory_size: self.memory_size,
            batch_size: self.batch_size,
            target: TargetSpec {
                rho: self.rho,
                epsilon: self.epsilon,
            },
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.train_batch_size,
            replay_ratio: self.replay_ratio,
            gamma: self.gamma,
        }
    }

    pub fn stream_config(&self) -> StreamConfig {
        let mut config = match self.profile {
            LabelProfile::Grouped => {
                StreamConfig::grouped(self.tasks, self.train_per_task, self.test_per_task, self.num_features, self.seed)
            }
            LabelProfile::Skewed => StreamConfig::skewed(
                self.tasks,
                self.train_per_task,
                self.num_labels,
                self.num_features,
                self.label_base,
                self.label_skew,
                self.label_variation,
                self.seed,
            ),
            LabelProfile::Uniform => StreamConfig::uniform(
                self.tasks,
                self.train_per_task,
                self.num_labels,
                self.num_features,
                self.label_base,
                self.seed,
            ),
        };
        config.test_per_task = self.test_per_task;
        config.task_shift = self.task_shift;
        config.noise = self.noise;
        config
    }

    pub fn load_stream(&self) -> Result<TaskStream> {
        Ok(match self.source {
            SourceKind::Synthetic => generate_stream(&self.stream_config())?,
            SourceKind::Samples => {
                let (train, n, l) = load_samples(self.train_csv.as_ref().expect("validated"))?;
                let (test, n_test, l_test) = load_samples(self.test_csv.as_ref().expect("validated"))?;
                if !test.is_empty() && !train.is_empty() && (n, l) != (n_test, l_test) {
                    return Err(BenchError::Config {
                        line: 0,
                        message: "train and test CSVs have different columns".into(),
                    });
                }
                let (n, l) = if train.is_empty() { (n_test, l_test) } else { (n, l) };
                stream_from_samples(train, test, l, n)?
            }
            SourceKind::AlarmLog => {
                let records = load_alarm_log(self.alarm_log.as_ref().expect("validated"))?;
                let spec = self.window_spec(&records);
                machines_to_stream(&window_alarm_log(&records, &spec)?, self.test_fraction)?
            }
        })
    }

    /// Window settings; with no target codes every code in the log is a target.
    pub fn window_spec(&self, records: &[ocdm_core::data::AlarmLogRecord]) -> WindowSpec {
        let mut spec = WindowSpec::new(self.d_in, self.d_out, self.target_codes.clone());
        if let Some(stride) = self.stride {
            spec.stride_minutes = stride;
        }
        spec.input_codes = self.input_codes.clone();
        spec.drop_empty_inputs = self.drop_empty_inputs;
        if spec.target_codes.is_empty() {
            spec.target_codes = ocdm_core::data::input_codes(records, &spec);
        }
        spec
    }

    /// Explicit groups, or the three frequency groups when there are 15 labels.
    pub fn label_groups(&self, num_labels: usize) -> Option<Vec<LabelGroup>> {
        self.groups.clone().or_else(|| (num_labels == 15).then(default_groups))
    }
}
