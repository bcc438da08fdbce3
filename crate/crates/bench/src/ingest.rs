//! Alarm log to sample CSV conversion.

use std::path::Path;

use ocdm_core::data::{load_alarm_log, machines_to_stream, save_samples, window_alarm_log, WindowSpec};
use ocdm_core::MultiLabelSample;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestSummary {
    pub machines: usize,
    pub train: usize,
    pub test: usize,
}

/// Windows the log and writes one sample CSV (task id = machine rank). With
/// `test` set, each machine's last `test_fraction` windows go there instead.
pub fn ingest(log: &Path, spec: &WindowSpec, out: &Path, test: Option<(&Path, f64)>) -> Result<IngestSummary> {
    let records = load_alarm_log(log)?;
    let machines = window_alarm_log(&records, spec)?;
    match test {
        Some((test_path, fraction)) => {
            let stream = machines_to_stream(&machines, fraction)?;
            let train: Vec<MultiLabelSample> = stream.tasks().iter().flat_map(|t| t.train.iter().cloned()).collect();
            let test: Vec<MultiLabelSample> = stream.tasks().iter().flat_map(|t| t.test.iter().cloned()).collect();
            save_samples(out, &train)?;
            save_samples(test_path, &test)?;
            Ok(IngestSummary { machines: machines.len(), train: train.len(), test: test.len() })
        }
        None => {
            let mut next_id = 0u64;
            let samples: Vec<MultiLabelSample> = machines
                .iter()
                .enumerate()
                .flat_map(|(i, m)| m.windows.iter().map(move |w| (i, w)))
                .map(|(i, w)| {
                    next_id += 1;
                    MultiLabelSample::new(w.features.clone(), w.labels.clone(), i as u32 + 1, next_id - 1)
                })
                .collect();
            save_samples(out, &samples)?;
            Ok(IngestSummary { machines: machines.len(), train: samples.len(), test: 0 })
        }
    }
}
