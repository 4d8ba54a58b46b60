use rand::Rng;

/// Streaming shuffle through a bounded buffer of `capacity` items.
///
/// The buffer is filled from the source; each output is drawn uniformly
/// from the buffer and its slot is refilled with the next source item.
/// An item at input position `p` can never be emitted before output
/// position `p - (capacity - 1)`.
pub struct QueueShuffle<I: Iterator, R> {
    source: I,
    buffer: Vec<I::Item>,
    capacity: usize,
    rng: R,
    primed: bool,
}

impl<I: Iterator, R: Rng> QueueShuffle<I, R> {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(source: I, capacity: usize, rng: R) -> Self {
        assert!(capacity >= 1, "queue size must be at least 1");
        QueueShuffle {
            source,
            buffer: Vec::with_capacity(capacity),
            capacity,
            rng,
            primed: false,
        }
    }
}

impl<I: Iterator, R: Rng> Iterator for QueueShuffle<I, R> {
    type Item = I::Item;

    fn next(&mut self) -> Option<I::Item> {
        if !self.primed {
            self.primed = true;
            self.buffer.extend(self.source.by_ref().take(self.capacity));
        }
        if self.buffer.is_empty() {
            return None;
        }
        let pick = if self.buffer.len() == 1 {
            0
        } else {
            self.rng.random_range(0..self.buffer.len())
        };
        let out = match self.source.next() {
            Some(incoming) => std::mem::replace(&mut self.buffer[pick], incoming),
            None => self.buffer.swap_remove(pick),
        };
        Some(out)
    }
}

/// Reorder `ids` through a queue of size `q`.
pub fn queue_shuffle_stream<T, R: Rng>(
    items: impl IntoIterator<Item = T>,
    q: usize,
    rng: R,
) -> Vec<T> {
    QueueShuffle::new(items.into_iter(), q, rng).collect()
}
