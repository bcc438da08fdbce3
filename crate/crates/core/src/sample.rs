use serde::{Deserialize, Serialize};

/// One multi-label example: a normalized alarm-count feature vector with its
/// n-hot label vector and the task it was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelSample {
    pub features: Vec<f64>,
    pub labels: Vec<bool>,
    pub task_id: u32,
    pub sample_id: u64,
}

impl MultiLabelSample {
    pub fn new(features: Vec<f64>, labels: Vec<bool>, task_id: u32, sample_id: u64) -> Self {
        Self {
            features,
            labels,
            task_id,
            sample_id,
        }
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    /// Number of positive labels.
    pub fn cardinality(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    pub fn positive_labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &y)| y.then_some(i))
    }
}

/// Builds a label vector of length `num_labels` with the given positive indices.
pub fn n_hot(num_labels: usize, positives: &[usize]) -> Vec<bool> {
    let mut labels = vec![false; num_labels];
    for &i in positives {
        labels[i] = true;
    }
    labels
}
