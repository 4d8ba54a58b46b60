use std::ops::{Add, Sub};

/// Page-granular I/O counters. One page transfer is one device operation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IoStats {
    pub pages_read_seq: u64,
    pub pages_read_rand: u64,
    pub pages_written_seq: u64,
    pub pages_written_rand: u64,
    pub page_cache_hits: u64,
    /// Pages fetched again after being evicted within the same epoch.
    pub redundant_page_loads: u64,
    pub read_calls: u64,
}

impl IoStats {
    pub fn pages_read(&self) -> u64 {
        self.pages_read_seq + self.pages_read_rand
    }

    pub fn pages_written(&self) -> u64 {
        self.pages_written_seq + self.pages_written_rand
    }

    /// Counter growth since `earlier`. Panics in debug builds if any
    /// counter went backwards.
    pub fn since(&self, earlier: &IoStats) -> IoStats {
        *self - *earlier
    }
}

impl Add for IoStats {
    type Output = IoStats;

    fn add(self, o: IoStats) -> IoStats {
        IoStats {
            pages_read_seq: self.pages_read_seq + o.pages_read_seq,
            pages_read_rand: self.pages_read_rand + o.pages_read_rand,
            pages_written_seq: self.pages_written_seq + o.pages_written_seq,
            pages_written_rand: self.pages_written_rand + o.pages_written_rand,
            page_cache_hits: self.page_cache_hits + o.page_cache_hits,
            redundant_page_loads: self.redundant_page_loads + o.redundant_page_loads,
            read_calls: self.read_calls + o.read_calls,
        }
    }
}

impl Sub for IoStats {
    type Output = IoStats;

    fn sub(self, o: IoStats) -> IoStats {
        IoStats {
            pages_read_seq: self.pages_read_seq - o.pages_read_seq,
            pages_read_rand: self.pages_read_rand - o.pages_read_rand,
            pages_written_seq: self.pages_written_seq - o.pages_written_seq,
            pages_written_rand: self.pages_written_rand - o.pages_written_rand,
            page_cache_hits: self.page_cache_hits - o.page_cache_hits,
            redundant_page_loads: self.redundant_page_loads - o.redundant_page_loads,
            read_calls: self.read_calls - o.read_calls,
        }
    }
}
