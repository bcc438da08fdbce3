//! Metrics restricted to groups of labels.

use ocdm_core::metrics::{average_forgetting, average_macro_f1, ScoreMatrix};
use serde::{Deserialize, Serialize};

use crate::config::LabelGroup;
use crate::error::{BenchError, Result};

/// Per-label f1 of every (trained-on, tested-on) task pair: `f1[i][j][label]`.
pub type LabelScores = Vec<Vec<Vec<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub name: String,
    pub labels: Vec<usize>,
    pub s_t: f64,
    /// Absent for a single task.
    pub f_t: Option<f64>,
}

/// Checks that `groups` partition `0..num_labels`.
pub fn check_partition(groups: &[LabelGroup], num_labels: usize) -> Result<()> {
    let mut seen = vec![false; num_labels];
    for group in groups {
        if group.labels.is_empty() {
            return Err(BenchError::Invalid(format!("group {} is empty", group.name)));
        }
        for &label in &group.labels {
            match seen.get_mut(label) {
                None => {
                    return Err(BenchError::Invalid(format!(
                        "group {} has label {label} outside 0..{num_labels}",
                        group.name
                    )))
                }
                Some(true) => {
                    return Err(BenchError::Invalid(format!("label {label} belongs to more than one group")))
                }
                Some(slot) => *slot = true,
            }
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(BenchError::Invalid(format!("label {missing} belongs to no group")));
    }
    Ok(())
}

/// Score matrix whose entries average the f1 of `labels` only.
pub fn group_score_matrix(label_scores: &LabelScores, labels: &[usize]) -> Result<ScoreMatrix> {
    let rows = label_scores
        .iter()
        .map(|row| {
            row.iter()
                .map(|f1| labels.iter().map(|&l| f1[l]).sum::<f64>() / labels.len() as f64)
                .collect()
        })
        .collect();
    Ok(ScoreMatrix::from_rows(rows)?)
}

pub fn frequency_group_metrics(label_scores: &LabelScores, groups: &[LabelGroup]) -> Result<Vec<GroupMetrics>> {
    let tasks = label_scores.len();
    let num_labels = label_scores
        .first()
        .and_then(|row| row.first())
        .map_or(0, Vec::len);
    check_partition(groups, num_labels)?;
    groups
        .iter()
        .map(|group| {
            let scores = group_score_matrix(label_scores, &group.labels)?;
            Ok(GroupMetrics {
                name: group.name.clone(),
                labels: group.labels.clone(),
                s_t: average_macro_f1(&scores, tasks)?,
                f_t: if tasks >= 2 { Some(average_forgetting(&scores, tasks)?) } else { None },
            })
        })
        .collect()
}
