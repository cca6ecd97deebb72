use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One labeled input and the task it came from (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub point: Vec<f64>,
    pub label: usize,
    pub task: usize,
}

/// Fixed-capacity replay memory filled by reservoir sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Sample>,
    /// Stream items offered so far.
    seen: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity),
            seen: 0,
        }
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

    pub fn items(&self) -> &[Sample] {
        &self.items
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// Offers stream item `stream_index` (0-based): stored outright while
    /// the buffer has room, otherwise it replaces slot `r ~ U{0..=index}`
    /// when `r < B`.
    pub fn reservoir_insert<R: Rng + ?Sized>(&mut self, sample: Sample, stream_index: u64, rng: &mut R) -> Result<()> {
        if stream_index < self.seen {
            return Err(Error::InvalidArgument(format!(
                "stream index {stream_index} repeats or goes back (already saw {})",
                self.seen
            )));
        }
        self.seen = stream_index + 1;
        if self.items.len() < self.capacity {
            self.items.push(sample);
        } else if self.capacity > 0 {
            let r = rng.random_range(0..=stream_index);
            if r < self.capacity as u64 {
                self.items[r as usize] = sample;
            }
        }
        Ok(())
    }

    /// Offers the next stream item.
    pub fn offer<R: Rng + ?Sized>(&mut self, sample: Sample, rng: &mut R) {
        let index = self.seen;
        self.reservoir_insert(sample, index, rng)
            .expect("the internal counter only moves forward");
    }

    /// Stored samples per source task.
    pub fn composition(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for s in &self.items {
            *m.entry(s.task).or_insert(0) += 1;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn sample(i: usize) -> Sample {
        Sample {
            point: vec![i as f64],
            label: 0,
            task: 1,
        }
    }

    #[test]
    fn first_items_are_kept() {
        let mut rng = stream_rng(1, Stream::Buffer, 0);
        let mut b = ReplayBuffer::new(3);
        for i in 0..3 {
            b.offer(sample(i), &mut rng);
        }
        assert_eq!(b.items().iter().map(|s| s.point[0] as usize).collect::<Vec<_>>(), vec![0, 1, 2]);
        for i in 3..50 {
            b.offer(sample(i), &mut rng);
            assert_eq!(b.len(), 3);
        }
        assert_eq!(b.seen(), 50);
        assert!(b.reservoir_insert(sample(0), 10, &mut rng).is_err());
    }

    #[test]
    fn zero_capacity_stays_empty() {
        let mut rng = stream_rng(1, Stream::Buffer, 0);
        let mut b = ReplayBuffer::new(0);
        for i in 0..10 {
            b.offer(sample(i), &mut rng);
        }
        assert!(b.is_empty());
    }
}
