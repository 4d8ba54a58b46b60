//! Out-of-core training-data shuffling and I/O cost benchmarking.
//!
//! The crate is organised by concern:
//!
//! * [`dataset`]: on-disk dense/sparse formats, synthetic generation and
//!   the per-instance offset table.
//! * [`shuffle`]: per-epoch batch plans (no shuffle, bounded queue, block
//!   minimization, LIRS by instance and by page).
//! * [`storage`]: tracked positioned/sequential reads, the LRU page cache
//!   and the device IOPS cost model.
//! * [`loader`]: executes a plan against storage, yielding batches.
//! * [`trainer`]: mini-batch SGD, convergence metrics and the training
//!   time model.
//! * [`bench`]: single runs, sweeps and CSV reports.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod loader;
pub mod rng;
pub mod shuffle;
pub mod storage;
pub mod trainer;

pub use error::{Error, Result};
