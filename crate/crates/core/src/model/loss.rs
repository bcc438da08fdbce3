//! Weighted focal loss for independent sigmoid outputs.
//!
//! Per label, with `p_t = p` for a positive target and `1 - p` otherwise:
//! `loss_i = -alpha_i * (1 - p_t)^gamma * ln(p_t)`, averaged over labels.

use serde::{Deserialize, Serialize};

use crate::sample::MultiLabelSample;

pub const PROB_CLAMP: f64 = 1e-7;
pub const DEFAULT_GAMMA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalLossSpec {
    pub gamma: f64,
    pub alpha: Vec<f64>,
}

impl FocalLossSpec {
    /// Unweighted spec; `gamma = 0` reduces to binary cross-entropy.
    pub fn uniform(num_labels: usize, gamma: f64) -> Self {
        Self {
            gamma,
            alpha: vec![1.0; num_labels],
        }
    }

    /// Weights each label by its inverse (Laplace-smoothed) frequency among
    /// `samples`, normalized so the weights average to one.
    pub fn from_label_frequencies<'a, I>(num_labels: usize, samples: I, gamma: f64) -> Self
    where
        I: IntoIterator<Item = &'a MultiLabelSample>,
    {
        let mut positives = vec![0usize; num_labels];
        let mut n = 0usize;
        for s in samples {
            n += 1;
            for i in s.positive_labels() {
                positives[i] += 1;
            }
        }
        let inverse: Vec<f64> = positives
            .iter()
            .map(|&c| (n as f64 + 2.0) / (c as f64 + 1.0))
            .collect();
        let mean = inverse.iter().sum::<f64>() / num_labels.max(1) as f64;
        Self {
            gamma,
            alpha: inverse.into_iter().map(|w| w / mean).collect(),
        }
    }
}

fn p_target(p: f64, positive: bool) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if positive {
        p
    } else {
        1.0 - p
    }
}

pub fn weighted_focal_loss(probs: &[f64], targets: &[bool], spec: &FocalLossSpec) -> f64 {
    let total: f64 = probs
        .iter()
        .zip(targets)
        .zip(&spec.alpha)
        .map(|((&p, &y), &alpha)| {
            let pt = p_target(p, y);
            -alpha * (1.0 - pt).powf(spec.gamma) * pt.ln()
        })
        .sum();
    total / probs.len().max(1) as f64
}

/// Gradient of [`weighted_focal_loss`] with respect to the pre-sigmoid logits.
///
/// Using `d p_t / d z = ±p_t (1 - p_t)`:
/// `d loss_i / d z_i = ±alpha_i [gamma (1-p_t)^gamma p_t ln p_t - (1-p_t)^(gamma+1)] / L`.
pub fn focal_logit_gradient(probs: &[f64], targets: &[bool], spec: &FocalLossSpec) -> Vec<f64> {
    let scale = 1.0 / probs.len().max(1) as f64;
    probs
        .iter()
        .zip(targets)
        .zip(&spec.alpha)
        .map(|((&p, &y), &alpha)| {
            let pt = p_target(p, y);
            let q = 1.0 - pt;
            let g = alpha * (spec.gamma * q.powf(spec.gamma) * pt * pt.ln() - q.powf(spec.gamma + 1.0));
            let sign = if y { 1.0 } else { -1.0 };
            sign * g * scale
        })
        .collect()
}
