use super::{SeededRng, SketchError};

/// What happened to an offered item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AddOutcome<T> {
    /// Appended while the reservoir had free slots.
    Added {
        position: usize,
    },
    /// Took the slot of `evicted`.
    Replaced {
        position: usize,
        evicted: T,
    },
    Discarded,
}

impl<T> AddOutcome<T> {
    pub fn was_added(&self) -> bool {
        matches!(self, AddOutcome::Added { .. })
    }

    pub fn was_replaced(&self) -> bool {
        matches!(self, AddOutcome::Replaced { .. })
    }

    pub fn position(&self) -> Option<usize> {
        match self {
            AddOutcome::Added { position } | AddOutcome::Replaced { position, .. } => {
                Some(*position)
            }
            AddOutcome::Discarded => None,
        }
    }
}

/// Fixed-capacity uniform sample over a stream of unknown length, using
/// rejection-acceptance: once full, the `n`-th offered item draws
/// `p` uniformly from `[0, n)` and replaces slot `p` when `p < capacity`.
#[derive(Debug, Clone)]
pub struct ReservoirSampler<T> {
    capacity: usize,
    seen: u64,
    items: Vec<T>,
    rng: SeededRng,
}

impl<T> ReservoirSampler<T> {
    pub fn new(capacity: usize, rng: SeededRng) -> Result<Self, SketchError> {
        if capacity == 0 {
            return Err(SketchError::ZeroCapacity);
        }
        Ok(ReservoirSampler {
            capacity,
            seen: 0,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            rng,
        })
    }

    pub fn with_seed(capacity: usize, seed: u64) -> Result<Self, SketchError> {
        Self::new(capacity, SeededRng::new(seed))
    }

    pub fn add(&mut self, item: T) -> AddOutcome<T> {
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push(item);
            return AddOutcome::Added {
                position: self.items.len() - 1,
            };
        }
        let p = self.rng.uniform_below(self.seen);
        if p < self.capacity as u64 {
            let position = p as usize;
            let evicted = std::mem::replace(&mut self.items[position], item);
            AddOutcome::Replaced { position, evicted }
        } else {
            AddOutcome::Discarded
        }
    }

    /// Current sample in slot order.
    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn into_items(self) -> Vec<T> {
        self.items
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of items offered so far.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }
}

impl<T: PartialEq> ReservoirSampler<T> {
    pub fn contains(&self, item: &T) -> bool {
        self.items.contains(item)
    }
}
