//! Turning alarm logs into multi-label samples.
//!
//! For an anchor time `t` the input is the normalized count of every alarm
//! code in `[t - d_in, t)` and the labels mark which target codes occur in
//! `[t, t + d_out)`. Anchors start `d_in` after a machine's first record and
//! advance by `stride` while the output window ends no later than one second
//! past the machine's last record.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::MultiLabelSample;
use crate::strategies::{TaskDataset, TaskStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlarmLogRecord {
    /// Seconds since the epoch.
    pub timestamp: i64,
    pub alarm_code: u32,
    pub machine_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub d_in_minutes: u64,
    pub d_out_minutes: u64,
    pub stride_minutes: u64,
    /// Codes whose future occurrence is predicted, in label order.
    pub target_codes: Vec<u32>,
    /// Input feature codes in feature order; defaults to every code in the log.
    pub input_codes: Option<Vec<u32>>,
    /// Skip windows whose input contains no alarm at all.
    pub drop_empty_inputs: bool,
}

impl WindowSpec {
    /// Windows with the stride equal to the output length.
    pub fn new(d_in_minutes: u64, d_out_minutes: u64, target_codes: Vec<u32>) -> Self {
        Self {
            d_in_minutes,
            d_out_minutes,
            stride_minutes: d_out_minutes,
            target_codes,
            input_codes: None,
            drop_empty_inputs: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_in_minutes == 0 || self.d_out_minutes == 0 || self.stride_minutes == 0 {
            return Err(Error::InvalidConfig("window lengths and stride must be positive".into()));
        }
        if self.target_codes.is_empty() {
            return Err(Error::InvalidConfig("at least one target code is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    /// Anchor time separating input and output windows.
    pub start: i64,
    pub features: Vec<f64>,
    pub labels: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineWindows {
    pub machine_id: u32,
    pub windows: Vec<WindowSample>,
}

/// Feature code order used by [`window_alarm_log`].
pub fn input_codes(records: &[AlarmLogRecord], spec: &WindowSpec) -> Vec<u32> {
    spec.input_codes.clone().unwrap_or_else(|| {
        records
            .iter()
            .map(|r| r.alarm_code)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    })
}

/// Windows every machine's log, machines in ascending id order.
pub fn window_alarm_log(records: &[AlarmLogRecord], spec: &WindowSpec) -> Result<Vec<MachineWindows>> {
    spec.validate()?;
    let codes = input_codes(records, spec);
    let index: HashMap<u32, usize> = codes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let lookup = |code: u32| index.get(&code).copied();
    if let Some(r) = records.iter().find(|r| lookup(r.alarm_code).is_none()) {
        return Err(Error::Schema(format!("alarm code {} is not an input code", r.alarm_code)));
    }

    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| (r.machine_id, r.timestamp));

    let d_in = spec.d_in_minutes as i64 * 60;
    let d_out = spec.d_out_minutes as i64 * 60;
    let stride = spec.stride_minutes as i64 * 60;

    let mut machines = Vec::new();
    for machine in sorted.chunk_by(|a, b| a.machine_id == b.machine_id) {
        let times: Vec<i64> = machine.iter().map(|r| r.timestamp).collect();
        let range = |from: i64, to: i64| {
            let lo = times.partition_point(|&t| t < from);
            let hi = times.partition_point(|&t| t < to);
            &machine[lo..hi]
        };
        let first = times[0];
        let horizon = times[times.len() - 1] + 1;

        let mut windows = Vec::new();
        let mut anchor = first + d_in;
        while anchor + d_out <= horizon {
            let mut features = vec![0.0; codes.len()];
            let input = range(anchor - d_in, anchor);
            for r in input {
                features[lookup(r.alarm_code).expect("validated above")] += 1.0;
            }
            if !input.is_empty() {
                let total = input.len() as f64;
                features.iter_mut().for_each(|f| *f /= total);
            }
            if !(input.is_empty() && spec.drop_empty_inputs) {
                let output = range(anchor, anchor + d_out);
                let labels = spec
                    .target_codes
                    .iter()
                    .map(|&code| output.iter().any(|r| r.alarm_code == code))
                    .collect();
                windows.push(WindowSample {
                    start: anchor,
                    features,
                    labels,
                });
            }
            anchor += stride;
        }
        machines.push(MachineWindows {
            machine_id: machine[0].machine_id,
            windows,
        });
    }
    Ok(machines)
}

/// Splits one machine's windows in time: the last `ceil(fraction * n)`
/// windows become the test set.
pub fn time_split(windows: &[WindowSample], test_fraction: f64) -> Result<(Vec<WindowSample>, Vec<WindowSample>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    if let Some(i) = windows.windows(2).position(|w| w[1].start <= w[0].start) {
        return Err(Error::Unsorted(i + 1));
    }
    let n_test = ((windows.len() as f64 * test_fraction).ceil() as usize).min(windows.len());
    let (train, test) = windows.split_at(windows.len() - n_test);
    Ok((train.to_vec(), test.to_vec()))
}

/// One task per machine (ascending id), split in time. Sample ids are
/// assigned sequentially, train before test within each task.
pub fn machines_to_stream(machines: &[MachineWindows], test_fraction: f64) -> Result<TaskStream> {
    let num_features = machines
        .iter()
        .flat_map(|m| m.windows.first())
        .map(|w| w.features.len())
        .next()
        .unwrap_or(0);
    let num_labels = machines
        .iter()
        .flat_map(|m| m.windows.first())
        .map(|w| w.labels.len())
        .next()
        .unwrap_or(0);
    let mut next_id = 0u64;
    let mut to_samples = |windows: Vec<WindowSample>, task_id: u32| -> Vec<MultiLabelSample> {
        windows
            .into_iter()
            .map(|w| {
                next_id += 1;
                MultiLabelSample::new(w.features, w.labels, task_id, next_id - 1)
            })
            .collect()
    };
    let mut tasks = Vec::with_capacity(machines.len());
    for (i, machine) in machines.iter().enumerate() {
        let task_id = i as u32 + 1;
        let (train, test) = time_split(&machine.windows, test_fraction)?;
        let train = to_samples(train, task_id);
        let test = to_samples(test, task_id);
        tasks.push(TaskDataset { task_id, train, test });
    }
    TaskStream::new(tasks, num_labels, num_features)
}
