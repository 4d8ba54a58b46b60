//! Page-granular I/O accounting, the simulated page cache and the device
//! cost model.

mod cache;
mod device;
mod io;
mod stats;
mod stream;

pub use cache::{CacheOutcome, PageCache};
pub use device::{estimate_time, DeviceProfile};
pub use io::{
    classify_access, AccessKind, FileId, IoContext, PageKey, TrackedFile, DEFAULT_PAGE_SIZE,
};
pub use stats::IoStats;
pub use stream::{SequentialReader, StreamStart};
