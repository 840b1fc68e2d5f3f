//! Bernoulli task sampling and per-task shuffled batch cursors.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskChoice {
    Source,
    Target,
}

/// One Bernoulli draw: Source with probability `sample_prob`.
pub fn sample_task(rng: &mut ChaCha8Rng, sample_prob: f64) -> TaskChoice {
    if rng.random_bool(sample_prob.clamp(0.0, 1.0)) {
        TaskChoice::Source
    } else {
        TaskChoice::Target
    }
}

/// Shuffled index cursor over one task's training set. Within one
/// task-epoch every index appears exactly once; the order reshuffles on
/// wrap. The final partial batch is kept, never dropped.
#[derive(Debug, Clone)]
pub struct BatchStream {
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
    epochs_completed: u64,
}

impl BatchStream {
    pub fn new(len: usize, seed: u64, stream: u64) -> Self {
        assert!(len > 0, "batch stream over an empty task");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(&mut rng);
        Self { order, cursor: 0, rng, epochs_completed: 0 }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn epochs_completed(&self) -> u64 {
        self.epochs_completed
    }

    pub fn batches_per_epoch(len: usize, batch_size: usize) -> usize {
        len.div_ceil(batch_size)
    }

    /// Next batch of at most `batch_size` indices. Batches never span an
    /// epoch boundary.
    pub fn next_batch(&mut self, batch_size: usize) -> Vec<usize> {
        debug_assert!(batch_size > 0);
        let take = batch_size.min(self.order.len() - self.cursor);
        let batch = self.order[self.cursor..self.cursor + take].to_vec();
        self.cursor += take;
        if self.cursor == self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
            self.epochs_completed += 1;
        }
        batch
    }
}
