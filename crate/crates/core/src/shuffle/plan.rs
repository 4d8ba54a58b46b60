use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    NoShuffle,
    BoundedQueue,
    BlockMinimization,
    LirsInstance,
    LirsPage,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::NoShuffle,
        Strategy::BoundedQueue,
        Strategy::BlockMinimization,
        Strategy::LirsInstance,
        Strategy::LirsPage,
    ];

    pub fn flag(self) -> &'static str {
        match self {
            Strategy::NoShuffle => "none",
            Strategy::BoundedQueue => "queue",
            Strategy::BlockMinimization => "bmf",
            Strategy::LirsInstance => "lirs-instance",
            Strategy::LirsPage => "lirs-page",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.flag())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.flag() == s)
            .ok_or_else(|| invalid(format!("unknown strategy '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    /// Number of batches per epoch.
    pub batches: usize,
    /// Shuffle buffer size, bounded-queue strategy only.
    pub queue_size: usize,
    /// Shuffle unit size in bytes, page-aware strategy only.
    pub page_size: u64,
    pub seed: u64,
}

impl StrategyConfig {
    pub fn new(strategy: Strategy, batches: usize, seed: u64) -> Self {
        StrategyConfig {
            strategy,
            batches,
            queue_size: 10_000,
            page_size: crate::storage::DEFAULT_PAGE_SIZE,
            seed,
        }
    }

    pub fn with_queue_size(mut self, q: usize) -> Self {
        self.queue_size = q;
        self
    }

    pub fn with_page_size(mut self, p: u64) -> Self {
        self.page_size = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batches == 0 {
            return Err(invalid("batch count must be at least 1"));
        }
        if self.queue_size == 0 {
            return Err(invalid("queue size must be at least 1"));
        }
        if self.page_size == 0 || !self.page_size.is_power_of_two() {
            return Err(invalid(format!(
                "page size {} is not a power of two",
                self.page_size
            )));
        }
        Ok(())
    }
}

/// One epoch's random assignment table: which instances form each batch,
/// in consumption order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochPlan {
    pub epoch: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub batches: Vec<Vec<u64>>,
}

impl EpochPlan {
    pub fn num_instances(&self) -> usize {
        self.batches.iter().map(Vec::len).sum()
    }

    /// Instance ids in consumption order.
    pub fn flatten(&self) -> Vec<u64> {
        self.batches.iter().flatten().copied().collect()
    }

    /// True iff every id in `0..n` appears exactly once.
    pub fn covers_exactly(&self, n: u64) -> bool {
        let mut seen = vec![false; n as usize];
        for &id in self.batches.iter().flatten() {
            match seen.get_mut(id as usize) {
                Some(slot) if !*slot => *slot = true,
                _ => return false,
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Write `epoch,batch_index,instance_id` lines.
    pub fn write_trace<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (b, batch) in self.batches.iter().enumerate() {
            for id in batch {
                writeln!(w, "{},{},{}", self.epoch, b, id)?;
            }
        }
        Ok(())
    }
}

/// Parse a trace back into `(epoch, batch_index, instance_id)` triples.
pub fn read_trace<R: BufRead>(r: R) -> Result<Vec<(usize, usize, u64)>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.trim().split(',').collect();
        let bad = || invalid(format!("trace line {}: '{line}'", n + 1));
        if parts.len() != 3 {
            return Err(bad());
        }
        out.push((
            parts[0].parse().map_err(|_| bad())?,
            parts[1].parse().map_err(|_| bad())?,
            parts[2].parse().map_err(|_| bad())?,
        ));
    }
    Ok(out)
}

/// Sizes of `b` batches over `n` units: the first `n mod b` get one extra.
pub fn split_sizes(n: usize, b: usize) -> Vec<usize> {
    let (base, extra) = (n / b, n % b);
    (0..b).map(|i| base + usize::from(i < extra)).collect()
}

/// Cut `order` into `b` contiguous slices sized by [`split_sizes`].
pub fn split_contiguous(order: &[u64], b: usize) -> Vec<Vec<u64>> {
    let mut rest = order;
    split_sizes(order.len(), b)
        .into_iter()
        .map(|size| {
            let (head, tail) = rest.split_at(size);
            rest = tail;
            head.to_vec()
        })
        .collect()
}
