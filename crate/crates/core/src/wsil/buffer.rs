//! Fixed-capacity FIFO replay buffer of successful planning episodes.

use crate::geometry::State;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Which planner produced a demonstration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DemoSource {
    /// Uniform exploration branch.
    Rrt,
    /// Learned bidirectional planner.
    SilRrtStar,
}

/// A successful episode: the scenario it solved, the found path, and its
/// measured length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemonstrationRecord {
    pub scenario_id: usize,
    pub path: Vec<State>,
    pub c_real: f64,
    pub source: DemoSource,
}

/// Bounded queue with strictly FIFO eviction.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    records: VecDeque<DemonstrationRecord>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            capacity,
            records: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: DemonstrationRecord) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    pub fn get(&self, i: usize) -> &DemonstrationRecord {
        &self.records[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DemonstrationRecord> {
        self.records.iter()
    }

    /// Uniform sample of `n` indices, with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        assert!(!self.records.is_empty());
        (0..n).map(|_| rng.random_range(0..self.records.len())).collect()
    }
}
