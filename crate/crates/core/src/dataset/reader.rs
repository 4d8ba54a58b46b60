use std::path::Path;

use super::format::{
    dense_record_size, sparse_nnz, sparse_record_size, DatasetFormat, DatasetHeader, Record,
    HEADER_SIZE, SPARSE_PREFIX,
};
use super::offsets::OffsetEntry;
use crate::error::{Error, Result};
use crate::storage::{IoContext, SequentialReader, StreamStart, TrackedFile};

/// An opened dataset file. The header is parsed once on open, outside
/// the simulated page cache.
#[derive(Debug)]
pub struct DatasetFile {
    pub header: DatasetHeader,
    pub file: TrackedFile,
}

impl DatasetFile {
    pub fn open(ctx: &mut IoContext, path: &Path) -> Result<DatasetFile> {
        let file = ctx.open(path, HEADER_SIZE as u64)?;
        if file.len() < HEADER_SIZE as u64 {
            return Err(Error::TruncatedHeader);
        }
        let mut raw = [0u8; HEADER_SIZE];
        file.read_exact_at(&mut raw, 0)?;
        let header = DatasetHeader::decode(&raw)?;
        Ok(DatasetFile { header, file })
    }

    pub fn num_instances(&self) -> u64 {
        self.header.num_instances
    }
}

/// One positioned read of the record described by `entry`.
pub fn read_record_at(
    ctx: &mut IoContext,
    dataset: &DatasetFile,
    instance_id: u64,
    entry: OffsetEntry,
) -> Result<Record> {
    let bytes = ctx.positioned_read(&dataset.file, entry.offset, entry.length as u64)?;
    Record::decode(
        &bytes,
        dataset.header.format,
        dataset.header.num_features,
        instance_id,
    )
}

/// Records read front to back from a run of consecutive serialized
/// records (a dataset body or a batch file).
pub struct RecordStream<'a> {
    reader: SequentialReader<'a>,
    format: DatasetFormat,
    num_features: u32,
    next_id: u64,
    end_id: u64,
    scratch: Vec<u8>,
}

impl<'a> RecordStream<'a> {
    /// Stream all records of a dataset in file order.
    pub fn dataset(ctx: &mut IoContext, dataset: &'a DatasetFile) -> Self {
        Self::over(
            ctx,
            &dataset.file,
            HEADER_SIZE as u64,
            StreamStart::Fresh,
            dataset.header.format,
            dataset.header.num_features,
            0,
            dataset.header.num_instances,
        )
    }

    /// Stream `count` records starting at byte `start` of `file`,
    /// numbering them from `first_id`.
    #[allow(clippy::too_many_arguments)]
    pub fn over(
        ctx: &mut IoContext,
        file: &'a TrackedFile,
        start: u64,
        how: StreamStart,
        format: DatasetFormat,
        num_features: u32,
        first_id: u64,
        count: u64,
    ) -> Self {
        RecordStream {
            reader: SequentialReader::new(ctx, file, start, how),
            format,
            num_features,
            next_id: first_id,
            end_id: first_id + count,
            scratch: Vec::new(),
        }
    }

    /// Byte position of the next record.
    pub fn position(&self) -> u64 {
        self.reader.position()
    }

    /// Bytes left in the file after the current position.
    pub fn remaining_bytes(&self) -> u64 {
        self.reader.remaining()
    }

    /// Next record and where it was found, or `None` after `count` records
    /// (or after the first error).
    pub fn next_record(&mut self, ctx: &mut IoContext) -> Option<Result<(Record, OffsetEntry)>> {
        if self.next_id >= self.end_id {
            return None;
        }
        let item = self.read_one(ctx);
        if item.is_err() {
            self.end_id = self.next_id;
        }
        Some(item)
    }

    /// Borrow `ctx` for the rest of the stream and iterate.
    pub fn with<'c>(self, ctx: &'c mut IoContext) -> Records<'a, 'c> {
        Records { stream: self, ctx }
    }

    fn read_one(&mut self, ctx: &mut IoContext) -> Result<(Record, OffsetEntry)> {
        let id = self.next_id;
        let offset = self.reader.position();
        let truncated = |e: Error| match e {
            Error::ShortRead { .. } => Error::TruncatedRecord { instance_id: id },
            other => other,
        };
        self.scratch.clear();
        match self.format {
            DatasetFormat::Dense => {
                self.scratch
                    .resize(dense_record_size(self.num_features) as usize, 0);
                self.reader
                    .read_exact(ctx, &mut self.scratch)
                    .map_err(truncated)?;
            }
            DatasetFormat::Sparse => {
                self.scratch.resize(SPARSE_PREFIX, 0);
                self.reader
                    .read_exact(ctx, &mut self.scratch)
                    .map_err(truncated)?;
                let nnz = sparse_nnz(&self.scratch, self.num_features, id)?;
                self.scratch.resize(sparse_record_size(nnz), 0);
                self.reader
                    .read_exact(ctx, &mut self.scratch[SPARSE_PREFIX..])
                    .map_err(truncated)?;
            }
        }
        let record = Record::decode(&self.scratch, self.format, self.num_features, id)?;
        self.next_id += 1;
        Ok((
            record,
            OffsetEntry {
                offset,
                length: self.scratch.len() as u32,
            },
        ))
    }
}

/// [`RecordStream`] bundled with its context, as an iterator.
pub struct Records<'a, 'c> {
    stream: RecordStream<'a>,
    ctx: &'c mut IoContext,
}

impl Records<'_, '_> {
    pub fn remaining_bytes(&self) -> u64 {
        self.stream.remaining_bytes()
    }
}

impl Iterator for Records<'_, '_> {
    type Item = Result<(Record, OffsetEntry)>;

    fn next(&mut self) -> Option<Self::Item> {
        self.stream.next_record(self.ctx)
    }
}
