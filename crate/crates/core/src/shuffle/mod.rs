//! Per-epoch batch plans for the five shuffling strategies.

mod bmf;
mod fisher_yates;
mod lirs;
pub mod memory;
mod plan;
mod queue;

pub use bmf::{batch_file_name, bmf_initial_split, plan_bmf, BmfAssignment, BmfSplit};
pub use fisher_yates::{fisher_yates, shuffle_in_place};
pub use lirs::{page_units, plan_lirs_instance, plan_lirs_page, records_fill_pages, PageUnit};
pub use plan::{read_trace, split_contiguous, split_sizes, EpochPlan, Strategy, StrategyConfig};
pub use queue::{queue_shuffle_stream, QueueShuffle};

use crate::dataset::OffsetTable;
use crate::error::{invalid, Result};
use crate::rng::epoch_rng;

/// Disk order, cut into `b` contiguous batches.
pub fn plan_no_shuffle(n: u64, b: usize, epoch: usize) -> Result<EpochPlan> {
    check_batches(n, b)?;
    let order: Vec<u64> = (0..n).collect();
    Ok(EpochPlan {
        epoch,
        strategy: Strategy::NoShuffle,
        seed: 0,
        batches: split_contiguous(&order, b),
    })
}

/// Disk order passed through a shuffle queue of size `q`, then cut into
/// `b` contiguous batches.
pub fn plan_queue(n: u64, b: usize, q: usize, epoch: usize, seed: u64) -> Result<EpochPlan> {
    check_batches(n, b)?;
    if q == 0 {
        return Err(invalid("queue size must be at least 1"));
    }
    let order = queue_shuffle_stream(0..n, q, epoch_rng(seed, epoch));
    Ok(EpochPlan {
        epoch,
        strategy: Strategy::BoundedQueue,
        seed,
        batches: split_contiguous(&order, b),
    })
}

fn check_batches(n: u64, b: usize) -> Result<()> {
    if b == 0 {
        return Err(invalid("batch count must be at least 1"));
    }
    if b as u64 > n {
        return Err(invalid(format!("{b} batches exceed {n} instances")));
    }
    Ok(())
}

/// Everything a strategy needs to produce the plan of any epoch.
#[derive(Debug, Clone)]
pub enum Planner {
    NoShuffle {
        n: u64,
        b: usize,
    },
    Queue {
        n: u64,
        b: usize,
        q: usize,
        seed: u64,
    },
    Bmf {
        assignment: BmfAssignment,
        seed: u64,
    },
    LirsInstance {
        n: u64,
        b: usize,
        seed: u64,
    },
    LirsPage {
        table: OffsetTable,
        page_size: u64,
        b: usize,
        seed: u64,
    },
}

impl Planner {
    /// Planner for every strategy except BMF, which needs its split first
    /// (see [`Planner::bmf`]). `table` is required for `LirsPage`.
    pub fn new(config: &StrategyConfig, n: u64, table: Option<&OffsetTable>) -> Result<Planner> {
        config.validate()?;
        let b = config.batches;
        let seed = config.seed;
        Ok(match config.strategy {
            Strategy::NoShuffle => Planner::NoShuffle { n, b },
            Strategy::BoundedQueue => Planner::Queue {
                n,
                b,
                q: config.queue_size,
                seed,
            },
            Strategy::LirsInstance => Planner::LirsInstance { n, b, seed },
            Strategy::LirsPage => Planner::LirsPage {
                table: table
                    .ok_or_else(|| invalid("page-aware planning needs an offset table"))?
                    .clone(),
                page_size: config.page_size,
                b,
                seed,
            },
            Strategy::BlockMinimization => {
                return Err(invalid("block minimization needs its initial split"))
            }
        })
    }

    pub fn bmf(assignment: BmfAssignment, seed: u64) -> Planner {
        Planner::Bmf { assignment, seed }
    }

    pub fn strategy(&self) -> Strategy {
        match self {
            Planner::NoShuffle { .. } => Strategy::NoShuffle,
            Planner::Queue { .. } => Strategy::BoundedQueue,
            Planner::Bmf { .. } => Strategy::BlockMinimization,
            Planner::LirsInstance { .. } => Strategy::LirsInstance,
            Planner::LirsPage { .. } => Strategy::LirsPage,
        }
    }

    pub fn plan(&self, epoch: usize) -> Result<EpochPlan> {
        match self {
            Planner::NoShuffle { n, b } => plan_no_shuffle(*n, *b, epoch),
            Planner::Queue { n, b, q, seed } => plan_queue(*n, *b, *q, epoch, *seed),
            Planner::Bmf { assignment, seed } => Ok(plan_bmf(assignment, epoch, *seed)),
            Planner::LirsInstance { n, b, seed } => plan_lirs_instance(*n, *b, epoch, *seed),
            Planner::LirsPage {
                table,
                page_size,
                b,
                seed,
            } => plan_lirs_page(table, *page_size, *b, epoch, *seed),
        }
    }
}
