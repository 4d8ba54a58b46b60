use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

/// Fixed-capacity page cache with least-recently-used eviction.
///
/// Recency is a monotonically increasing tick; `order` maps tick to key so
/// the eviction victim is the first entry.
#[derive(Debug, Clone)]
pub struct PageCache<K> {
    capacity: usize,
    tick: u64,
    stamps: HashMap<K, u64>,
    order: BTreeMap<u64, K>,
}

/// Result of touching one page.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOutcome<K> {
    Hit,
    Miss { evicted: Option<K> },
}

impl<K: Copy + Eq + Hash> PageCache<K> {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "page cache needs at least one page");
        PageCache {
            capacity,
            tick: 0,
            stamps: HashMap::with_capacity(capacity.min(1 << 16)),
            order: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    pub fn contains(&self, key: &K) -> bool {
        self.stamps.contains_key(key)
    }

    /// Touch `key`, loading it on a miss and evicting the LRU page if full.
    pub fn access(&mut self, key: K) -> CacheOutcome<K> {
        self.tick += 1;
        if let Some(stamp) = self.stamps.get_mut(&key) {
            self.order.remove(stamp);
            *stamp = self.tick;
            self.order.insert(self.tick, key);
            return CacheOutcome::Hit;
        }
        let mut evicted = None;
        if self.stamps.len() == self.capacity {
            let (_, victim) = self.order.pop_first().expect("full cache has an LRU entry");
            self.stamps.remove(&victim);
            evicted = Some(victim);
        }
        self.stamps.insert(key, self.tick);
        self.order.insert(self.tick, key);
        CacheOutcome::Miss { evicted }
    }

    pub fn clear(&mut self) {
        self.stamps.clear();
        self.order.clear();
    }

    /// Resident keys from least to most recently used.
    pub fn resident_lru_order(&self) -> Vec<K> {
        self.order.values().copied().collect()
    }
}
