use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Transition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayMode {
    /// Uniform sampling without replacement.
    #[default]
    Uniform,
    /// Sampling with replacement in proportion to the last absolute TD error.
    TdProportional,
}

const MIN_PRIORITY: f64 = 1e-6;

/// Binary sum tree over leaf priorities.
#[derive(Debug, Clone)]
struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(capacity: usize) -> Self {
        let leaves = capacity.next_power_of_two();
        Self {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    fn set(&mut self, i: usize, value: f64) {
        let mut n = i + self.leaves;
        self.nodes[n] = value;
        while n > 1 {
            n /= 2;
            self.nodes[n] = self.nodes[2 * n] + self.nodes[2 * n + 1];
        }
    }

    fn get(&self, i: usize) -> f64 {
        self.nodes[i + self.leaves]
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// Leaf whose cumulative range contains `mass`.
    fn find(&self, mut mass: f64) -> usize {
        let mut n = 1;
        while n < self.leaves {
            let left = self.nodes[2 * n];
            if mass < left {
                n *= 2;
            } else {
                mass -= left;
                n = 2 * n + 1;
            }
        }
        n - self.leaves
    }
}

/// Fixed-capacity ring of transitions; the oldest entry is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
    mode: ReplayMode,
    priorities: Option<SumTree>,
    max_priority: f64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, mode: ReplayMode) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be >= 1".into()));
        }
        Ok(Self {
            capacity,
            items: Vec::new(),
            next: 0,
            mode,
            priorities: (mode == ReplayMode::TdProportional).then(|| SumTree::new(capacity)),
            max_priority: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn mode(&self) -> ReplayMode {
        self.mode
    }

    pub fn get(&self, slot: usize) -> Option<&Transition> {
        self.items.get(slot)
    }

    pub fn push(&mut self, t: Transition) {
        let slot = self.next;
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[slot] = t;
        }
        self.next = (slot + 1) % self.capacity;
        let p = self.max_priority;
        if let Some(tree) = &mut self.priorities {
            tree.set(slot, p);
        }
    }

    /// Slots of up to `batch` stored transitions.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        let n = batch.min(self.items.len());
        match &self.priorities {
            None => index::sample(rng, self.items.len(), n).into_vec(),
            Some(tree) => (0..n)
                .map(|_| {
                    let slot = tree.find(rng.random::<f64>() * tree.total());
                    // Guard against landing on an empty padding leaf through
                    // rounding at the upper edge.
                    slot.min(self.items.len() - 1)
                })
                .collect(),
        }
    }

    /// Records the latest absolute TD error of a slot.
    pub fn update_priority(&mut self, slot: usize, td_error: f64) {
        if let Some(tree) = &mut self.priorities {
            let p = td_error.abs().max(MIN_PRIORITY);
            self.max_priority = self.max_priority.max(p);
            tree.set(slot, p);
        }
    }

    pub fn priority(&self, slot: usize) -> Option<f64> {
        self.priorities.as_ref().map(|t| t.get(slot))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::StateVector;
    use crate::rng::SimRng;
    use rand::SeedableRng;

    fn t(reward: f64) -> Transition {
        Transition {
            state: StateVector(vec![reward]),
            action_idx: 0,
            reward,
            next_state: StateVector(vec![reward]),
        }
    }

    #[test]
    fn capacity_and_eviction() {
        let mut buf = ReplayBuffer::new(3, ReplayMode::Uniform).unwrap();
        for r in 0..5 {
            buf.push(t(r as f64));
            assert!(buf.len() <= 3);
        }
        let mut rewards: Vec<f64> = (0..3).map(|i| buf.get(i).unwrap().reward).collect();
        rewards.sort_by(f64::total_cmp);
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
        assert!(ReplayBuffer::new(0, ReplayMode::Uniform).is_err());
    }

    #[test]
    fn sampling_is_bounded_by_contents() {
        let mut rng = SimRng::seed_from_u64(1);
        let mut buf = ReplayBuffer::new(10, ReplayMode::Uniform).unwrap();
        assert!(buf.sample(4, &mut rng).is_empty());
        buf.push(t(1.0));
        buf.push(t(2.0));
        let s = buf.sample(128, &mut rng);
        assert_eq!(s.len(), 2);
        assert_ne!(s[0], s[1]);
    }

    #[test]
    fn prioritized_sampling_follows_priorities() {
        let mut rng = SimRng::seed_from_u64(2);
        let mut buf = ReplayBuffer::new(5, ReplayMode::TdProportional).unwrap();
        for r in 0..3 {
            buf.push(t(r as f64));
        }
        buf.update_priority(0, 0.0);
        buf.update_priority(1, 3.0);
        buf.update_priority(2, 1.0);
        let mut counts = [0usize; 3];
        for _ in 0..4000 {
            for s in buf.sample(1, &mut rng) {
                counts[s] += 1;
            }
        }
        // Expected split ≈ 0 : 3/4 : 1/4.
        assert!(counts[0] < 10, "{counts:?}");
        let frac = counts[1] as f64 / 4000.0;
        assert!((frac - 0.75).abs() < 0.03, "{counts:?}");
    }

    #[test]
    fn new_items_get_max_priority() {
        let mut buf = ReplayBuffer::new(4, ReplayMode::TdProportional).unwrap();
        buf.push(t(0.0));
        buf.update_priority(0, 5.0);
        buf.push(t(1.0));
        assert_eq!(buf.priority(1), Some(5.0));
    }
}
