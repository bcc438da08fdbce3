//! CSV readers and writers.
//!
//! Alarm logs use the header `timestamp,alarm_code,machine_id`. Sample files
//! use `task_id,sample_id,c_0..c_{N-1},y_0..y_{L-1}` with labels written as
//! `0`/`1`. Reals are written in shortest round-trip form.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sample::MultiLabelSample;
use crate::strategies::{TaskDataset, TaskStream};

use super::alarms::AlarmLogRecord;

const ALARM_HEADER: [&str; 3] = ["timestamp", "alarm_code", "machine_id"];

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, index: usize, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(index).ok_or_else(|| Error::Parse {
        line: line_of(record),
        message: format!("missing field {name}"),
    })?;
    raw.trim().parse().map_err(|e: T::Err| Error::Parse {
        line: line_of(record),
        message: format!("{name}: {e} ({raw:?})"),
    })
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Schema(format!("missing column {name}")))
}

pub fn read_alarm_log<R: Read>(reader: R) -> Result<Vec<AlarmLogRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = ALARM_HEADER.iter().map(|n| column(&headers, n)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        out.push(AlarmLogRecord {
            timestamp: parse_field(&record, idx[0], ALARM_HEADER[0])?,
            alarm_code: parse_field(&record, idx[1], ALARM_HEADER[1])?,
            machine_id: parse_field(&record, idx[2], ALARM_HEADER[2])?,
        });
    }
    Ok(out)
}

pub fn write_alarm_log<W: Write>(writer: W, records: &[AlarmLogRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(ALARM_HEADER)?;
    for r in records {
        wtr.write_record([r.timestamp.to_string(), r.alarm_code.to_string(), r.machine_id.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_alarm_log(path: impl AsRef<Path>) -> Result<Vec<AlarmLogRecord>> {
    read_alarm_log(File::open(path)?)
}

pub fn save_alarm_log(path: impl AsRef<Path>, records: &[AlarmLogRecord]) -> Result<()> {
    write_alarm_log(File::create(path)?, records)
}

fn sample_header(num_features: usize, num_labels: usize) -> Vec<String> {
    let mut header = vec!["task_id".to_string(), "sample_id".to_string()];
    header.extend((0..num_features).map(|i| format!("c_{i}")));
    header.extend((0..num_labels).map(|i| format!("y_{i}")));
    header
}

/// Feature and label column counts implied by a sample header.
fn sample_layout(headers: &csv::StringRecord) -> Result<(usize, usize)> {
    let n = headers.iter().filter(|h| h.starts_with("c_")).count();
    let l = headers.iter().filter(|h| h.starts_with("y_")).count();
    let expected = sample_header(n, l);
    if headers.len() != expected.len() || headers.iter().zip(&expected).any(|(h, e)| h.trim() != e) {
        let missing = expected
            .iter()
            .find(|e| !headers.iter().any(|h| h.trim() == e.as_str()))
            .cloned();
        return Err(Error::Schema(match missing {
            Some(name) => format!("missing column {name}"),
            None => format!("expected columns {}", expected.join(",")),
        }));
    }
    Ok((n, l))
}

/// Reads samples; returns them with the feature and label counts.
pub fn read_samples<R: Read>(reader: R) -> Result<(Vec<MultiLabelSample>, usize, usize)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let (n, l) = sample_layout(rdr.headers()?)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let features = (0..n)
            .map(|i| parse_field::<f64>(&record, 2 + i, "feature"))
            .collect::<Result<Vec<_>>>()?;
        let labels = (0..l)
            .map(|i| match parse_field::<u8>(&record, 2 + n + i, "label")? {
                0 => Ok(false),
                1 => Ok(true),
                v => Err(Error::Parse {
                    line: line_of(&record),
                    message: format!("label must be 0 or 1, got {v}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(MultiLabelSample::new(
            features,
            labels,
            parse_field(&record, 0, "task_id")?,
            parse_field(&record, 1, "sample_id")?,
        ));
    }
    Ok((out, n, l))
}

pub fn write_samples<W: Write>(writer: W, samples: &[MultiLabelSample]) -> Result<()> {
    let (n, l) = samples.first().map_or((0, 0), |s| (s.features.len(), s.labels.len()));
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(sample_header(n, l))?;
    for s in samples {
        if s.features.len() != n || s.labels.len() != l {
            return Err(Error::DimensionMismatch {
                expected: n + l,
                actual: s.features.len() + s.labels.len(),
            });
        }
        let mut row = vec![s.task_id.to_string(), s.sample_id.to_string()];
        row.extend(s.features.iter().map(|f| f.to_string()));
        row.extend(s.labels.iter().map(|&y| if y { "1" } else { "0" }.to_string()));
        wtr.write_record(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<(Vec<MultiLabelSample>, usize, usize)> {
    read_samples(File::open(path)?)
}

pub fn save_samples(path: impl AsRef<Path>, samples: &[MultiLabelSample]) -> Result<()> {
    write_samples(File::create(path)?, samples)
}

/// Groups train and test samples into tasks by `task_id`, ascending.
pub fn stream_from_samples(
    train: Vec<MultiLabelSample>,
    test: Vec<MultiLabelSample>,
    num_labels: usize,
    num_features: usize,
) -> Result<TaskStream> {
    let mut ids: Vec<u32> = train.iter().chain(&test).map(|s| s.task_id).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut tasks: Vec<TaskDataset> = ids
        .iter()
        .map(|&task_id| TaskDataset {
            task_id,
            train: Vec::new(),
            test: Vec::new(),
        })
        .collect();
    let slot = |id: u32| ids.binary_search(&id).expect("id collected above");
    for s in train {
        tasks[slot(s.task_id)].train.push(s);
    }
    for s in test {
        tasks[slot(s.task_id)].test.push(s);
    }
    TaskStream::new(tasks, num_labels, num_features)
}
