use rand::seq::index;
use rand::Rng;

use crate::sample::MultiLabelSample;

/// Builds one training batch: `ceil(batch_size * (1 - replay_ratio))` samples
/// from the new task and the remainder drawn uniformly from `memory`.
///
/// With an empty memory the whole batch comes from the new task. Draws are
/// without replacement where the source is large enough, with replacement from
/// a memory smaller than its share.
pub fn compose_training_batch<'a, R: Rng + ?Sized>(
    new_task_data: &[&'a MultiLabelSample],
    memory: &[&'a MultiLabelSample],
    replay_ratio: f64,
    batch_size: usize,
    rng: &mut R,
) -> Vec<&'a MultiLabelSample> {
    let ratio = replay_ratio.clamp(0.0, 1.0);
    let replayed = if memory.is_empty() {
        0
    } else {
        // floor(b * r) == b - ceil(b * (1 - r)); the nudge absorbs products like 10 * 0.7.
        ((batch_size as f64 * ratio) + 1e-9).floor() as usize
    };
    let fresh = batch_size - replayed;

    let mut batch = Vec::with_capacity(batch_size);
    let take = fresh.min(new_task_data.len());
    batch.extend(
        index::sample(rng, new_task_data.len(), take)
            .into_iter()
            .map(|i| new_task_data[i]),
    );
    if replayed > 0 {
        if memory.len() >= replayed {
            batch.extend(index::sample(rng, memory.len(), replayed).into_iter().map(|i| memory[i]));
        } else {
            batch.extend((0..replayed).map(|_| memory[rng.random_range(0..memory.len())]));
        }
    }
    batch
}
