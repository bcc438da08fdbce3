use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{FocalLossSpec, DEFAULT_GAMMA};
use super::mlp::MlpModel;
use crate::error::{Error, Result};
use crate::sample::MultiLabelSample;
use crate::strategies::compose_training_batch;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub replay_ratio: f64,
    pub gamma: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            learning_rate: 1e-2,
            batch_size: 32,
            replay_ratio: 0.5,
            gamma: DEFAULT_GAMMA,
        }
    }
}

/// Trains `model` on one task with plain mini-batch gradient descent.
///
/// Each epoch walks a fresh shuffle of `new_data`; every step pairs the next
/// chunk of new samples with replayed samples from `replay` via
/// [`compose_training_batch`]. Focal-loss label weights are recomputed from
/// `new_data` and `replay`. Returns the mean training loss of each epoch.
pub fn train_task<R: Rng + ?Sized>(
    model: &mut MlpModel,
    new_data: &[MultiLabelSample],
    replay: &[&MultiLabelSample],
    config: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(Error::InvalidConfig("epochs and batch size must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&config.replay_ratio) {
        return Err(Error::InvalidConfig(format!("replay ratio {} outside [0, 1]", config.replay_ratio)));
    }
    let spec = FocalLossSpec::from_label_frequencies(
        model.num_outputs(),
        new_data.iter().chain(replay.iter().copied()),
        config.gamma,
    );
    let replayed = if replay.is_empty() {
        0
    } else {
        ((config.batch_size as f64 * config.replay_ratio) + 1e-9).floor() as usize
    };
    let chunk = (config.batch_size - replayed).max(1);

    let mut order: Vec<&MultiLabelSample> = new_data.iter().collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut steps = 0usize;
        for fresh in order.chunks(chunk) {
            let batch = compose_training_batch(fresh, replay, config.replay_ratio, config.batch_size, rng);
            let (loss, grads) = model.batch_gradients(&batch, &spec, true, rng)?;
            model.apply_gradients(&grads, config.learning_rate);
            loss_sum += loss;
            steps += 1;
        }
        epoch_losses.push(if steps == 0 { 0.0 } else { loss_sum / steps as f64 });
    }
    Ok(epoch_losses)
}
