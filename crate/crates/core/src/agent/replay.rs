use std::collections::VecDeque;

use rand::Rng;

use super::{AgentError, Result, Transition};

/// Fixed-capacity FIFO of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: VecDeque::with_capacity(capacity.min(1 << 16)) }
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

    pub fn clear(&mut self) {
        self.items.clear();
    }

    /// Appends, evicting the oldest transition when full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `batch_size` draws, uniform and with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<Transition>> {
        self.sample_min(batch_size, 1, rng)
    }

    /// As [`sample`](Self::sample), but refuses while fewer than `min_replay` transitions are stored.
    pub fn sample_min<R: Rng + ?Sized>(&self, batch_size: usize, min_replay: usize, rng: &mut R) -> Result<Vec<Transition>> {
        let need = min_replay.max(1);
        if self.items.len() < need {
            return Err(AgentError::NotEnoughReplay { have: self.items.len(), need });
        }
        Ok((0..batch_size).map(|_| self.items[rng.gen_range(0..self.items.len())]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(id: usize) -> Transition {
        Transition { state: [id as f64, 0.0, 0.0, 0.0], action: 0, reward: id as f64, next_state: [0.0; 4], done: false, outage: false }
    }

    #[test]
    fn fifo_eviction() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..4 {
            b.push(t(i));
        }
        assert_eq!(b.len(), 3);
        let ids: Vec<f64> = b.iter().map(|x| x.reward).collect();
        assert_eq!(ids, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn with_replacement() {
        let mut b = ReplayBuffer::new(10);
        b.push(t(7));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = b.sample(4, &mut rng).unwrap();
        assert_eq!(batch, vec![t(7); 4]);
    }

    #[test]
    fn under_filled() {
        let mut b = ReplayBuffer::new(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(b.sample(4, &mut rng).is_err());
        b.push(t(1));
        assert!(matches!(b.sample_min(4, 5, &mut rng), Err(AgentError::NotEnoughReplay { have: 1, need: 5 })));
    }

    #[test]
    fn uniform_frequencies() {
        let mut b = ReplayBuffer::new(10);
        for i in 0..10 {
            b.push(t(i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut counts = [0usize; 10];
        for x in b.sample(100_000, &mut rng).unwrap() {
            counts[x.reward as usize] += 1;
        }
        let e = 10_000.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 0.999 quantile of chi-square(9) is 27.88
        assert!(chi2 < 27.88, "{counts:?}");
    }
}
