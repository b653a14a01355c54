//! Fixed-capacity FIFO experience store.

use std::collections::VecDeque;

use rand::seq::index;

use crate::env::Experience;
use crate::error::InsufficientSamples;
use crate::Rng;

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Experience>,
    pushed: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: VecDeque::with_capacity(capacity), pushed: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Total number of experiences ever pushed.
    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    pub fn push(&mut self, exp: Experience) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(exp);
        self.pushed += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items.iter()
    }

    /// Draws `batch_size` distinct experiences uniformly at random.
    pub fn sample(
        &self,
        batch_size: usize,
        rng: &mut Rng,
    ) -> Result<Vec<&Experience>, InsufficientSamples> {
        if self.items.len() < batch_size {
            return Err(InsufficientSamples { available: self.items.len(), requested: batch_size });
        }
        Ok(index::sample(rng, self.items.len(), batch_size).into_iter().map(|i| &self.items[i]).collect())
    }
}
