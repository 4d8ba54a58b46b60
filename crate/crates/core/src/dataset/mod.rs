//! Binary dataset formats, synthetic data generation and the offset table.
//!
//! A dataset file (`.shfd`) is a 32-byte header followed by contiguous
//! records. Dense records are `label:i32` + F × `f32`; sparse records are
//! `label:i32` + `nnz:u32` + nnz × (`index:u32`, `value:f32`). All integers
//! and reals are little endian. The offset sidecar (`.shfo`) is a bare
//! sequence of (`offset:u64`, `length:u32`) entries.

mod format;
mod generate;
mod offsets;
mod reader;

pub use format::{
    dense_record_size, sparse_record_size, DatasetFormat, DatasetHeader, Features, Record,
    HEADER_SIZE, LABEL_WIDTH, MAGIC,
};
pub use generate::{generate_synthetic, synthesize, write_dataset, Layout, SyntheticSpec};
pub use offsets::{build_offset_table, dense_offset, sidecar_path, OffsetEntry, OffsetTable};
pub use reader::{read_record_at, DatasetFile, RecordStream, Records};

use std::path::Path;

use crate::error::Result;
use crate::storage::IoContext;

/// Read every record of a dataset into memory, outside any I/O accounting
/// the caller cares about.
pub fn load_all(path: &Path) -> Result<(DatasetHeader, Vec<Record>)> {
    let mut ctx = IoContext::new(crate::storage::DEFAULT_PAGE_SIZE, 1)?;
    let dataset = DatasetFile::open(&mut ctx, path)?;
    let records = RecordStream::dataset(&mut ctx, &dataset)
        .with(&mut ctx)
        .map(|item| item.map(|(r, _)| r))
        .collect::<Result<Vec<_>>>()?;
    Ok((dataset.header, records))
}
